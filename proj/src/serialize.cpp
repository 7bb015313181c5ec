// SPDX-License-Identifier: Apache-2.0

#include "revolver/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "revolver/errors.hpp"

namespace revolver {

namespace {

constexpr char kCtMagic[8] = {'R', 'V', 'C', 'T', '0', '0', '0', '1'};
constexpr char kModelMagic[8] = {'R', 'V', 'M', 'B', '0', '0', '0', '1'};
constexpr std::uint64_t kMaxSlots = std::uint64_t{1} << 28;

void put_u64(std::ostream &out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
    out.write(b.data(), 8);
}

void put_u32(std::ostream &out, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
    out.write(b.data(), 4);
}

struct In {
    std::istream &in;
    const std::string &source;

    [[noreturn]] void fail(const std::string &msg) const {
        const auto at = in ? static_cast<long long>(in.tellg()) : -1LL;
        throw IngestError(source + ": offset " + std::to_string(at) + ": " + msg);
    }

    void bytes(char *dst, std::size_t n) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) throw IngestError(source + ": truncated record");
    }

    std::uint64_t u64() {
        std::array<unsigned char, 8> b{};
        bytes(reinterpret_cast<char *>(b.data()), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint32_t u32() {
        std::array<unsigned char, 4> b{};
        bytes(reinterpret_cast<char *>(b.data()), 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
};

nlohmann::json fc_manifest(const EncodedFc &fc) {
    const MatrixShape s = fc.tiles.empty() ? MatrixShape{} : fc.tiles[0].shape;
    return {{"inner_blocks", fc.inner_blocks}, {"col_blocks", fc.col_blocks}, {"tile_p", fc.tile_p},
            {"out_dim", fc.out_dim},           {"segment", fc.segment},       {"rows", s.rows},
            {"width", s.cols}};
}

}  // namespace

void write_ciphertext(std::ostream &out, const Ciphertext &ct) {
    out.write(kCtMagic, 8);
    put_u32(out, static_cast<std::uint32_t>(ct.layout().kind));
    put_u32(out, 0);
    put_u64(out, ct.layout().rows);
    put_u64(out, ct.layout().cols);
    put_u64(out, ct.layout().h);
    put_u64(out, ct.layout().w);
    put_u64(out, ct.depth());
    put_u64(out, ct.size());
    for (double x : ct.slots()) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

Ciphertext read_ciphertext(std::istream &in, const std::string &source) {
    In r{in, source};
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kCtMagic, 8) != 0) r.fail("bad ciphertext magic");
    const std::uint32_t kind = r.u32();
    if (kind > static_cast<std::uint32_t>(LayoutKind::image)) r.fail("unknown layout kind " + std::to_string(kind));
    r.u32();
    Layout layout;
    layout.kind = static_cast<LayoutKind>(kind);
    layout.rows = r.u64();
    layout.cols = r.u64();
    layout.h = r.u64();
    layout.w = r.u64();
    const std::uint64_t depth = r.u64();
    const std::uint64_t n = r.u64();
    if (n == 0 || n > kMaxSlots) r.fail("implausible slot count " + std::to_string(n));
    std::vector<std::uint64_t> raw(n);
    r.bytes(reinterpret_cast<char *>(raw.data()), n * 8);
    std::vector<double> slots(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t v = raw[i];
        if constexpr (std::endian::native == std::endian::big) {
            std::uint64_t s = 0;
            for (int b = 0; b < 8; ++b) s = (s << 8) | ((v >> (8 * b)) & 0xff);
            v = s;
        }
        slots[i] = std::bit_cast<double>(v);
    }
    return Ciphertext::from_slots(std::move(slots), depth, layout);
}

void save_ciphertext(const std::filesystem::path &path, const Ciphertext &ct) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError(path.string() + ": cannot write");
    write_ciphertext(out, ct);
    if (!out) throw IngestError(path.string() + ": write failed");
}

Ciphertext load_ciphertext(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(path.string() + ": cannot open");
    Ciphertext ct = read_ciphertext(in, path.string());
    if (in.peek() != std::char_traits<char>::eof())
        throw IngestError(path.string() + ": trailing bytes after the ciphertext record");
    return ct;
}

void save_model(const std::filesystem::path &path, const EncodedModel &model, std::size_t slots) {
    nlohmann::json spans = nlohmann::json::array();
    for (const KernelSpan &s : model.spans)
        spans.push_back({{"k", s.k}, {"h", s.shape.h}, {"w", s.shape.w}, {"count", s.tiling.count},
                         {"stride", s.tiling.stride}});
    const nlohmann::json manifest = {{"format", "revolver-model"},
                                     {"simulated", true},
                                     {"slots", slots},
                                     {"k", model.k},
                                     {"stride", model.stride},
                                     {"images_per_ct", model.images_per_ct},
                                     {"act1", model.act1},
                                     {"act2", model.act2},
                                     {"spans", spans},
                                     {"fc1", fc_manifest(model.fc1)},
                                     {"fc2", fc_manifest(model.fc2)},
                                     {"ciphertexts", model.ciphertext_count()}};
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError(path.string() + ": cannot write");
    out.write(kModelMagic, 8);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const KernelSpan &s : model.spans) {
        for (const Ciphertext &ct : s.span_cts) write_ciphertext(out, ct);
        write_ciphertext(out, s.bias_ct);
    }
    for (const EncodedFc *fc : {&model.fc1, &model.fc2}) {
        for (const PackedMatrix &t : fc->tiles) write_ciphertext(out, t.ct);
        for (const Ciphertext &b : fc->biases) write_ciphertext(out, b);
    }
    if (!out) throw IngestError(path.string() + ": write failed");
}

EncodedModel load_model(const std::filesystem::path &path, std::size_t slots) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(path.string() + ": cannot open");
    const std::string source = path.string();
    In r{in, source};
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kModelMagic, 8) != 0) r.fail("bad model bundle magic");
    const std::uint64_t len = r.u64();
    if (len > (std::uint64_t{1} << 24)) r.fail("implausible manifest length");
    std::string text(len, '\0');
    r.bytes(text.data(), len);

    EncodedModel model;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("slots").get<std::size_t>() != slots)
            throw IngestError(source + ": bundle built for " + std::to_string(j.at("slots").get<std::size_t>()) +
                              " slots, engine has " + std::to_string(slots));
        model.k = j.at("k").get<std::size_t>();
        model.stride = j.at("stride").get<std::size_t>();
        model.images_per_ct = j.at("images_per_ct").get<std::size_t>();
        model.act1 = j.at("act1").get<Poly3>();
        model.act2 = j.at("act2").get<Poly3>();
        auto ct = [&] {
            Ciphertext c = read_ciphertext(in, source);
            if (c.size() != slots) r.fail("ciphertext slot count differs from the manifest");
            return c;
        };
        for (const auto &s : j.at("spans")) {
            KernelSpan span;
            span.k = s.at("k").get<std::size_t>();
            span.shape = {s.at("h").get<std::size_t>(), s.at("w").get<std::size_t>()};
            span.tiling = {s.at("count").get<std::size_t>(), s.at("stride").get<std::size_t>()};
            for (std::size_t i = 0; i < span.k * span.k; ++i) span.span_cts.push_back(ct());
            span.bias_ct = ct();
            model.spans.push_back(std::move(span));
        }
        for (auto [fc, key] : {std::pair{&model.fc1, "fc1"}, std::pair{&model.fc2, "fc2"}}) {
            const auto &f = j.at(key);
            fc->inner_blocks = f.at("inner_blocks").get<std::size_t>();
            fc->col_blocks = f.at("col_blocks").get<std::size_t>();
            fc->tile_p = f.at("tile_p").get<std::size_t>();
            fc->out_dim = f.at("out_dim").get<std::size_t>();
            fc->segment = f.at("segment").get<std::size_t>();
            const MatrixShape shape{f.at("rows").get<std::size_t>(), f.at("width").get<std::size_t>()};
            for (std::size_t i = 0; i < fc->inner_blocks * fc->col_blocks; ++i)
                fc->tiles.push_back({ct(), shape, Encoding::revolver, fc->tile_p});
            for (std::size_t i = 0; i < fc->col_blocks; ++i) fc->biases.push_back(ct());
        }
    } catch (const nlohmann::json::exception &e) {
        throw IngestError(source + ": bad manifest: " + e.what());
    }
    if (in.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes after the last record");
    return model;
}

}  // namespace revolver
