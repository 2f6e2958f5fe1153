#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "agcn/tensor.hpp"

namespace agcn {

// "AGT1" tensor files: magic 0x41 0x47 0x54 0x31, u8 rank, rank little-endian
// u32 dims, then the row-major payload as little-endian f32. Values are
// narrowed to float on write.
void write_agt(std::ostream& out, const Tensor& t);
Tensor read_agt(std::istream& in);

void save_agt(const std::filesystem::path& path, const Tensor& t);
Tensor load_agt(const std::filesystem::path& path);

// Rounds every element to the nearest float, as a save/load would.
Tensor round_to_f32(const Tensor& t);

}  // namespace agcn
