// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <charconv>
#include <fstream>
#include <string>
#include <system_error>

#include "revolver/errors.hpp"
#include "revolver/pack.hpp"

namespace revolver {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Matrix read_csv_matrix(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IngestError(path.string() + ": cannot open");
    std::vector<double> values;
    std::size_t cols = 0, rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view rest = trim(line);
        if (rest.empty()) continue;
        std::size_t count = 0;
        while (true) {
            const auto comma = rest.find(',');
            const std::string_view field = trim(rest.substr(0, comma));
            double v = 0.0;
            const char *first = field.data();
            const char *last = field.data() + field.size();
            if (!field.empty() && *first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last || field.empty())
                throw IngestError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                                  std::string(field) + "'");
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (rows == 0) cols = count;
        if (count != cols)
            throw IngestError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                              " columns, found " + std::to_string(count));
        ++rows;
    }
    Matrix m(rows, cols);
    m.data() = std::move(values);
    return m;
}

void write_csv_matrix(const std::filesystem::path &path, const Matrix &m) {
    std::ofstream out(path);
    if (!out) throw IngestError(path.string() + ": cannot write");
    std::array<char, 32> buf{};
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
            out.write(buf.data(), ptr - buf.data());
        }
        out << '\n';
    }
}

}  // namespace revolver
