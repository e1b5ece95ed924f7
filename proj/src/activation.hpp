#pragma once

#include <span>

namespace cerl::nn::detail {

// ELU with alpha = 1, in place. Built with vector math enabled (see CMakeLists.txt).
void elu_inplace(std::span<double> v);

}  // namespace cerl::nn::detail
