// SPDX-License-Identifier: Apache-2.0

#include "revolver/mnist.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "revolver/errors.hpp"

namespace revolver {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

struct Reader {
    std::filesystem::path path;
    std::vector<unsigned char> bytes;
    std::size_t pos = 0;

    explicit Reader(const std::filesystem::path &p) : path(p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw IngestError(p.string() + ": cannot open");
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    [[noreturn]] void fail(const std::string &msg, std::size_t at) const {
        throw IngestError(path.string() + ": offset " + std::to_string(at) + ": " + msg);
    }

    std::uint32_t u32() {
        if (pos + 4 > bytes.size()) fail("truncated header", pos);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | bytes[pos++];
        return v;
    }

    void need(std::size_t count) const {
        if (pos + count > bytes.size())
            fail("truncated data: need " + std::to_string(count) + " bytes, have " +
                     std::to_string(bytes.size() - pos),
                 pos);
    }
};

void put_u32(std::ofstream &out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

}  // namespace

std::vector<Matrix> load_idx_images(const std::filesystem::path &path, std::size_t limit) {
    Reader r(path);
    const std::uint32_t magic = r.u32();
    if (magic != kImageMagic) r.fail("bad magic for an image file", 0);
    const std::size_t n = r.u32(), h = r.u32(), w = r.u32();
    if (h == 0 || w == 0) r.fail("zero image dimension", 8);
    const std::size_t count = limit ? std::min(limit, n) : n;
    r.need(count * h * w);
    std::vector<Matrix> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Matrix m(h, w);
        for (double &x : m.data()) x = r.bytes[r.pos++] / 255.0;
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path &path, std::size_t limit) {
    Reader r(path);
    const std::uint32_t magic = r.u32();
    if (magic != kLabelMagic) r.fail("bad magic for a label file", 0);
    const std::size_t n = r.u32();
    const std::size_t count = limit ? std::min(limit, n) : n;
    r.need(count);
    return {r.bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
            r.bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + count)};
}

void write_idx_images(const std::filesystem::path &path, const std::vector<Matrix> &images) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError(path.string() + ": cannot write");
    const std::size_t h = images.empty() ? 0 : images[0].rows();
    const std::size_t w = images.empty() ? 0 : images[0].cols();
    put_u32(out, kImageMagic);
    put_u32(out, static_cast<std::uint32_t>(images.size()));
    put_u32(out, static_cast<std::uint32_t>(h));
    put_u32(out, static_cast<std::uint32_t>(w));
    for (const Matrix &m : images) {
        if (m.rows() != h || m.cols() != w) throw PreconditionError("write_idx_images: images differ in shape");
        for (double x : m.data()) out.put(static_cast<char>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)));
    }
}

void write_idx_labels(const std::filesystem::path &path, const std::vector<std::uint8_t> &labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError(path.string() + ": cannot write");
    put_u32(out, kLabelMagic);
    put_u32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char *>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace revolver
