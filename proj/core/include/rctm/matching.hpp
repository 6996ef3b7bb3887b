#pragma once

#include <cstdint>
#include <vector>

namespace rctm {

// Maximum-weight bipartite assignment (Hungarian method, O(n^3)).
// `weight` is rows x cols, row-major. Returns, per row, the matched column
// or -1 when rows > cols leaves the row unmatched. Rectangular inputs are
// padded internally with zero weight.
std::vector<int> max_weight_assignment(const std::vector<double>& weight, std::size_t rows,
                                       std::size_t cols);

}  // namespace rctm
