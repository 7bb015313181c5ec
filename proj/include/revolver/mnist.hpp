// SPDX-License-Identifier: Apache-2.0

// MNIST IDX files: big-endian headers, magic 0x00000803 for u8 image
// tensors and 0x00000801 for u8 label vectors.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "revolver/matrix.hpp"

namespace revolver {

/// Images scaled to [0, 1] (pixel / 255). `limit` > 0 reads at most that many.
/// Throws IngestError naming the file and byte offset.
std::vector<Matrix> load_idx_images(const std::filesystem::path &path, std::size_t limit = 0);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path &path, std::size_t limit = 0);

/// Pixels are clamped to [0, 1] and rounded to the nearest of 256 levels.
void write_idx_images(const std::filesystem::path &path, const std::vector<Matrix> &images);
void write_idx_labels(const std::filesystem::path &path, const std::vector<std::uint8_t> &labels);

}  // namespace revolver
