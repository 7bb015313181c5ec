// SPDX-License-Identifier: Apache-2.0

// On-disk formats. Simulated ciphertexts are plain slot vectors, so every
// file written here carries ".SIMULATED." in its conventional name.
//
// Ciphertext record (little-endian):
//   "RVCT0001" | u32 layout kind | u32 reserved | u64 rows, cols, h, w |
//   u64 depth | u64 slot count | f64 slots...
// Model bundle:
//   "RVMB0001" | u64 manifest length | JSON manifest | ciphertext records...

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "revolver/cnn.hpp"
#include "revolver/engine.hpp"

namespace revolver {

void write_ciphertext(std::ostream &out, const Ciphertext &ct);
/// `source` names the stream in error messages.
Ciphertext read_ciphertext(std::istream &in, const std::string &source);

void save_ciphertext(const std::filesystem::path &path, const Ciphertext &ct);
Ciphertext load_ciphertext(const std::filesystem::path &path);

void save_model(const std::filesystem::path &path, const EncodedModel &model, std::size_t slots);
/// Throws IngestError when the bundle is malformed or was built for another slot count.
EncodedModel load_model(const std::filesystem::path &path, std::size_t slots);

}  // namespace revolver
