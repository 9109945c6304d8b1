#include "bevforge/tensor.hpp"

namespace bevforge {

namespace {

double pairwise_sum_range(const double* values, std::size_t n) {
  // Straight loop below the leaf size; recursion tree above it depends only on n.
  if (n <= 32) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += values[i];
    return acc;
  }
  std::size_t half = n / 2;
  return pairwise_sum_range(values, half) + pairwise_sum_range(values + half, n - half);
}

}  // namespace

double pairwise_sum(const double* values, std::size_t n) { return pairwise_sum_range(values, n); }

double pairwise_sum(const std::vector<double>& values) {
  return pairwise_sum_range(values.data(), values.size());
}

}  // namespace bevforge
