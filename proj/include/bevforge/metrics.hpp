#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevforge/classes.hpp"
#include "bevforge/tensor.hpp"

namespace bevforge {

// Row = reference class, column = predicted class.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::uint64_t> counts;

  explicit ConfusionMatrix(std::size_t k = classes::kCount)
      : classes(k), counts(k * k, 0) {}

  std::uint64_t& at(std::size_t ref, std::size_t pred) { return counts[ref * classes + pred]; }
  std::uint64_t at(std::size_t ref, std::size_t pred) const {
    return counts[ref * classes + pred];
  }
};

// Adds every cell where neither side is the ignore id.  Maps must share the
// lattice; ids past the matrix size are corrupt input.
void accumulate_confusion(const Tensor<std::uint8_t>& pred, const Tensor<std::uint8_t>& ref,
                          ConfusionMatrix& confusion);

// Per-class intersection-over-union.  A class with an empty union (never seen
// in reference or prediction) is excluded from the mean and flagged invalid.
struct IouReport {
  std::vector<double> per_class;
  std::vector<bool> valid;
  double miou = 0.0;
};

IouReport compute_iou(const ConfusionMatrix& confusion);

// Two-line table (class-name header, percentage row with n/a for excluded
// classes) followed by a one-line CSV of the same numbers.
std::string format_iou_report(const IouReport& report);

}  // namespace bevforge
