#pragma once

// Binary checkpoint of a VolNetwork. Layout (little-endian), version 1:
//
//   offset  type        content
//   0       char[8]     magic "SHIVNET\0"
//   8       uint32      format version (1)
//   12      uint32      hidden activation code (0 relu, 1 relu2, 2 relu3, 3 elu, 4 tanh, 5 softplus)
//   16      uint32      hidden layer count L
//   20      uint32[L]   hidden widths n_1..n_L
//   ...     float64[]   for l = 1..L+1: W_l row-major (n_l x n_{l-1}), then b_l (n_l)
//
// n_0 = 2 (tau, kappa) and n_{L+1} = 1 (Softplus output) are implied.

#include <filesystem>
#include <iosfwd>

#include "shallowiv/neural.hpp"

namespace shallowiv::neural {

void write_checkpoint(std::ostream& out, const VolNetwork& net);
VolNetwork read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const VolNetwork& net);
VolNetwork load_checkpoint(const std::filesystem::path& path);

} // namespace shallowiv::neural
