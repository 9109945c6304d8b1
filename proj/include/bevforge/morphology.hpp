#pragma once

#include <cstddef>
#include <cstdint>

#include "bevforge/tensor.hpp"

namespace bevforge {

// Binary morphology on X x Z masks (nonzero = set) with the 3x3 8-connected
// structuring element.  Dilation treats outside-the-lattice as empty and
// erosion treats it as set, which makes closing extensive: close(m) >= m
// everywhere, including the border.

Tensor<std::uint8_t> binary_dilate(const Tensor<std::uint8_t>& mask);
Tensor<std::uint8_t> binary_erode(const Tensor<std::uint8_t>& mask);

// `iters` dilations followed by `iters` erosions; iters = 0 is the identity.
Tensor<std::uint8_t> binary_close(const Tensor<std::uint8_t>& mask, std::size_t iters);

}  // namespace bevforge
