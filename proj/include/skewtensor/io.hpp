#pragma once

#include <string>
#include <vector>

#include "skewtensor/tensor.hpp"

namespace skewtensor {

// Binary dataset container: magic "STVD", version byte 1, u32 order,
// order x u32 dims, u64 observation count, then count * n_star float64
// values per observation in storage order. All integers and doubles are
// little-endian. Every structural problem throws value_error.
std::vector<Tensor> read_dataset(const std::string& path);
void write_dataset(const std::string& path, const std::vector<Tensor>& xs);

// Binary PPM (P6, maxval 255) as an (height, width, 3) tensor scaled
// to [0, 1].
Tensor read_ppm(const std::string& path);

// Dispatch on the path: a directory is read as its .ppm files sorted by
// filename, a .ppm file as a single observation, anything else as a
// dataset container.
std::vector<Tensor> read_dataset_any(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace skewtensor
