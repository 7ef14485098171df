#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sepsync {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantile (numpy's default), q in [0, 1].
double quantile(std::span<const double> sorted, double q);

Summary summarize(std::vector<double> values);

}  // namespace sepsync
