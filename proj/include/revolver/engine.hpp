// SPDX-License-Identifier: Apache-2.0

// Exact slot engine: the SIMD homomorphic primitive set (Enc, Dec, Add, Mul,
// cMul, Rot) evaluated on plain doubles. Every higher module talks to the
// engine only through these operations, so operation counts and
// multiplicative depth measured here are what a CKKS backend would incur.
//
// Rescaling is not modelled; each Mul and cMul raises the depth by one.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace revolver {

struct EngineParams {
    std::size_t slots = 32768;
    int log_q = 1200;
    int log_n = 16;
    int delta = 45;    // scale 2^delta
    int delta_c = 20;  // constant scale 2^delta_c

    /// Throws PreconditionError unless slots is a power of two >= 2.
    void validate() const;

    /// Reads a JSON object with optional keys slots, logq, logn, delta, delta_c.
    /// Missing keys keep their defaults.
    static EngineParams load(const std::filesystem::path &path);

    bool operator==(const EngineParams &) const = default;
};

/// Operation counters. Merging sums counters and takes the max depth.
struct OpMeter {
    std::uint64_t add_count = 0;
    std::uint64_t mul_count = 0;
    std::uint64_t cmul_count = 0;
    std::uint64_t rot_count = 0;
    std::uint64_t enc_count = 0;
    std::uint64_t max_depth = 0;

    OpMeter &merge(const OpMeter &other);
    /// Counter-wise difference; max_depth is taken from *this.
    OpMeter since(const OpMeter &earlier) const;

    bool operator==(const OpMeter &) const = default;
};

enum class LayoutKind : std::uint32_t {
    none = 0,
    matrix = 1,        // rows x cols, row-major
    dataset = 2,       // rows images of h x w at row stride cols
    image_column = 3,  // rows images, column of h pixels each at stride cols
    image = 4,         // one h x w image
};

/// Describes how a ciphertext's slots are to be read. Pure metadata.
struct Layout {
    LayoutKind kind = LayoutKind::none;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    bool operator==(const Layout &) const = default;
};

enum class MaskRole { constant, filter };

/// Plaintext vector used by cMul. Filter masks hold only 0.0 and 1.0.
class PlainMask {
  public:
    explicit PlainMask(std::vector<double> values, MaskRole role = MaskRole::constant);

    /// Builds a filter mask; throws PreconditionError on any entry other than 0 or 1.
    static PlainMask filter(std::vector<double> values);

    std::span<const double> values() const { return values_; }
    MaskRole role() const { return role_; }
    std::size_t size() const { return values_.size(); }

  private:
    std::vector<double> values_;
    MaskRole role_;
};

/// Immutable slot vector with a depth counter. Copies share storage.
class Ciphertext {
  public:
    Ciphertext() = default;

    /// Wraps existing slot data (deserialization). Does not touch any meter.
    static Ciphertext from_slots(std::vector<double> slots, std::size_t depth, Layout layout = {});

    std::span<const double> slots() const;
    std::size_t size() const { return data_ ? data_->size() : 0; }
    std::size_t depth() const { return depth_; }
    const Layout &layout() const { return layout_; }
    bool empty() const { return !data_; }

    /// Same slots and depth under a different layout tag.
    Ciphertext with_layout(Layout layout) const;

  private:
    friend class Engine;
    Ciphertext(std::shared_ptr<const std::vector<double>> data, std::size_t depth, Layout layout)
        : data_(std::move(data)), depth_(depth), layout_(layout) {}

    std::shared_ptr<const std::vector<double>> data_;
    std::size_t depth_ = 0;
    Layout layout_;
};

/// Evaluates primitives and meters them. Operations are thread-safe; the
/// meter uses atomic counters.
class Engine {
  public:
    explicit Engine(EngineParams params = {});
    Engine(const Engine &) = delete;
    Engine &operator=(const Engine &) = delete;

    const EngineParams &params() const { return params_; }
    std::size_t slots() const { return params_.slots; }

    /// Leading slots take `values`, the rest are zero. Throws CapacityError
    /// when values.size() > slots.
    Ciphertext enc(std::span<const double> values, Layout layout = {});
    std::vector<double> dec(const Ciphertext &ct) const;

    Ciphertext add(const Ciphertext &a, const Ciphertext &b);
    Ciphertext mul(const Ciphertext &a, const Ciphertext &b);
    Ciphertext cmul(const PlainMask &mask, const Ciphertext &ct);
    /// Adds a plaintext vector; counted as an Add, no depth change.
    Ciphertext add_plain(const PlainMask &plain, const Ciphertext &ct);
    /// Slot i of the result is slot (i + l) mod slots of the input. Negative l rotates right.
    Ciphertext rot(const Ciphertext &ct, long long l);

    OpMeter meter_snapshot() const;
    void reset_meter();

  private:
    void check(const Ciphertext &ct, const char *op) const;
    void note_depth(std::size_t depth);

    EngineParams params_;
    std::atomic<std::uint64_t> add_{0}, mul_{0}, cmul_{0}, rot_{0}, enc_{0}, depth_{0};
};

}  // namespace revolver
