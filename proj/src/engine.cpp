// SPDX-License-Identifier: Apache-2.0

#include "revolver/engine.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include <json.hpp>

#include "revolver/errors.hpp"
#include "revolver/matrix.hpp"

namespace revolver {

void EngineParams::validate() const {
    if (slots < 2 || !is_power_of_two(slots))
        throw PreconditionError("engine: slots must be a power of two >= 2, got " + std::to_string(slots));
}

EngineParams EngineParams::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IngestError(path.string() + ": cannot open config");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw IngestError(path.string() + ": " + e.what());
    }
    EngineParams p;
    try {
        if (j.contains("slots")) p.slots = j.at("slots").get<std::size_t>();
        if (j.contains("logq")) p.log_q = j.at("logq").get<int>();
        if (j.contains("logn")) p.log_n = j.at("logn").get<int>();
        if (j.contains("delta")) p.delta = j.at("delta").get<int>();
        if (j.contains("delta_c")) p.delta_c = j.at("delta_c").get<int>();
    } catch (const nlohmann::json::exception &e) {
        throw IngestError(path.string() + ": " + e.what());
    }
    p.validate();
    return p;
}

OpMeter &OpMeter::merge(const OpMeter &other) {
    add_count += other.add_count;
    mul_count += other.mul_count;
    cmul_count += other.cmul_count;
    rot_count += other.rot_count;
    enc_count += other.enc_count;
    max_depth = std::max(max_depth, other.max_depth);
    return *this;
}

OpMeter OpMeter::since(const OpMeter &earlier) const {
    OpMeter d;
    d.add_count = add_count - earlier.add_count;
    d.mul_count = mul_count - earlier.mul_count;
    d.cmul_count = cmul_count - earlier.cmul_count;
    d.rot_count = rot_count - earlier.rot_count;
    d.enc_count = enc_count - earlier.enc_count;
    d.max_depth = max_depth;
    return d;
}

PlainMask::PlainMask(std::vector<double> values, MaskRole role) : values_(std::move(values)), role_(role) {}

PlainMask PlainMask::filter(std::vector<double> values) {
    for (double v : values)
        if (v != 0.0 && v != 1.0) throw PreconditionError("filter mask entries must be 0 or 1");
    return PlainMask(std::move(values), MaskRole::filter);
}

Ciphertext Ciphertext::from_slots(std::vector<double> slots, std::size_t depth, Layout layout) {
    return Ciphertext(std::make_shared<const std::vector<double>>(std::move(slots)), depth, layout);
}

std::span<const double> Ciphertext::slots() const {
    if (!data_) return {};
    return *data_;
}

Ciphertext Ciphertext::with_layout(Layout layout) const { return Ciphertext(data_, depth_, layout); }

Engine::Engine(EngineParams params) : params_(params) { params_.validate(); }

void Engine::check(const Ciphertext &ct, const char *op) const {
    if (ct.size() != params_.slots)
        throw EngineError(std::string(op) + ": ciphertext has " + std::to_string(ct.size()) + " slots, engine has " +
                          std::to_string(params_.slots));
}

void Engine::note_depth(std::size_t depth) {
    std::uint64_t cur = depth_.load(std::memory_order_relaxed);
    while (cur < depth && !depth_.compare_exchange_weak(cur, depth, std::memory_order_relaxed)) {
    }
}

Ciphertext Engine::enc(std::span<const double> values, Layout layout) {
    if (values.size() > params_.slots)
        throw CapacityError("enc: " + std::to_string(values.size()) + " values exceed " +
                            std::to_string(params_.slots) + " slots");
    auto out = std::make_shared<std::vector<double>>(params_.slots, 0.0);
    std::copy(values.begin(), values.end(), out->begin());
    enc_.fetch_add(1, std::memory_order_relaxed);
    return Ciphertext(std::move(out), 0, layout);
}

std::vector<double> Engine::dec(const Ciphertext &ct) const {
    check(ct, "dec");
    return {ct.slots().begin(), ct.slots().end()};
}

Ciphertext Engine::add(const Ciphertext &a, const Ciphertext &b) {
    check(a, "add");
    check(b, "add");
    auto out = std::make_shared<std::vector<double>>(params_.slots);
    auto x = a.slots(), y = b.slots();
    for (std::size_t i = 0; i < out->size(); ++i) (*out)[i] = x[i] + y[i];
    add_.fetch_add(1, std::memory_order_relaxed);
    return Ciphertext(std::move(out), std::max(a.depth(), b.depth()), a.layout());
}

Ciphertext Engine::mul(const Ciphertext &a, const Ciphertext &b) {
    check(a, "mul");
    check(b, "mul");
    auto out = std::make_shared<std::vector<double>>(params_.slots);
    auto x = a.slots(), y = b.slots();
    for (std::size_t i = 0; i < out->size(); ++i) (*out)[i] = x[i] * y[i];
    const std::size_t depth = std::max(a.depth(), b.depth()) + 1;
    mul_.fetch_add(1, std::memory_order_relaxed);
    note_depth(depth);
    return Ciphertext(std::move(out), depth, a.layout());
}

Ciphertext Engine::cmul(const PlainMask &mask, const Ciphertext &ct) {
    check(ct, "cmul");
    if (mask.size() != params_.slots) throw EngineError("cmul: mask length differs from slot count");
    auto out = std::make_shared<std::vector<double>>(params_.slots);
    auto x = ct.slots();
    auto m = mask.values();
    for (std::size_t i = 0; i < out->size(); ++i) (*out)[i] = m[i] * x[i];
    const std::size_t depth = ct.depth() + 1;
    cmul_.fetch_add(1, std::memory_order_relaxed);
    note_depth(depth);
    return Ciphertext(std::move(out), depth, ct.layout());
}

Ciphertext Engine::add_plain(const PlainMask &plain, const Ciphertext &ct) {
    check(ct, "add_plain");
    if (plain.size() != params_.slots) throw EngineError("add_plain: plaintext length differs from slot count");
    auto out = std::make_shared<std::vector<double>>(params_.slots);
    auto x = ct.slots();
    auto m = plain.values();
    for (std::size_t i = 0; i < out->size(); ++i) (*out)[i] = m[i] + x[i];
    add_.fetch_add(1, std::memory_order_relaxed);
    return Ciphertext(std::move(out), ct.depth(), ct.layout());
}

Ciphertext Engine::rot(const Ciphertext &ct, long long l) {
    check(ct, "rot");
    const auto n = static_cast<long long>(params_.slots);
    const auto shift = static_cast<std::size_t>(((l % n) + n) % n);
    auto out = std::make_shared<std::vector<double>>(params_.slots);
    auto x = ct.slots();
    std::rotate_copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(shift), x.end(), out->begin());
    rot_.fetch_add(1, std::memory_order_relaxed);
    return Ciphertext(std::move(out), ct.depth(), ct.layout());
}

OpMeter Engine::meter_snapshot() const {
    OpMeter m;
    m.add_count = add_.load();
    m.mul_count = mul_.load();
    m.cmul_count = cmul_.load();
    m.rot_count = rot_.load();
    m.enc_count = enc_.load();
    m.max_depth = depth_.load();
    return m;
}

void Engine::reset_meter() {
    add_ = 0;
    mul_ = 0;
    cmul_ = 0;
    rot_ = 0;
    enc_ = 0;
    depth_ = 0;
}

}  // namespace revolver
