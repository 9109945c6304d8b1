#include "bevforge/morphology.hpp"

#include "bevforge/error.hpp"

namespace bevforge {

namespace {

void check_mask(const Tensor<std::uint8_t>& mask) {
  if (mask.ndim() != 2) {
    throw_error(ErrorCode::ShapeMismatch,
                "mask must be 2-d, got " + shape_to_string(mask.shape()));
  }
}

Tensor<std::uint8_t> apply_3x3(const Tensor<std::uint8_t>& mask, bool dilate) {
  std::size_t nx = mask.dim(0), nz = mask.dim(1);
  Tensor<std::uint8_t> out({nx, nz});
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iz = 0; iz < nz; ++iz) {
      bool hit = dilate ? false : true;
      for (long long dx = -1; dx <= 1; ++dx) {
        for (long long dz = -1; dz <= 1; ++dz) {
          long long jx = static_cast<long long>(ix) + dx;
          long long jz = static_cast<long long>(iz) + dz;
          bool inside = jx >= 0 && jz >= 0 && jx < static_cast<long long>(nx) &&
                        jz < static_cast<long long>(nz);
          // Outside cells: empty for dilation, set for erosion.
          bool value = inside ? mask(static_cast<std::size_t>(jx),
                                     static_cast<std::size_t>(jz)) != 0
                              : !dilate;
          if (dilate) hit = hit || value;
          else hit = hit && value;
        }
      }
      out(ix, iz) = hit ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

Tensor<std::uint8_t> binary_dilate(const Tensor<std::uint8_t>& mask) {
  check_mask(mask);
  return apply_3x3(mask, true);
}

Tensor<std::uint8_t> binary_erode(const Tensor<std::uint8_t>& mask) {
  check_mask(mask);
  return apply_3x3(mask, false);
}

Tensor<std::uint8_t> binary_close(const Tensor<std::uint8_t>& mask, std::size_t iters) {
  check_mask(mask);
  Tensor<std::uint8_t> out = mask;
  for (std::size_t i = 0; i < iters; ++i) out = binary_dilate(out);
  for (std::size_t i = 0; i < iters; ++i) out = binary_erode(out);
  return out;
}

}  // namespace bevforge
