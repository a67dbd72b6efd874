#pragma once
#include <vector>

namespace figlab {

double student_t_quantile(double probability, int dof);

struct PairedSummary {
  long n = 0;
  double mean = 0;
  double sd = 0;        // sample standard deviation
  double lower_95 = 0;  // mean - t_{0.95, n-1} * sd / sqrt(n)
};

// One-sided lower confidence bound for the mean of paired differences.
// Needs at least two pairs.
PairedSummary one_sided_lower_bound(const std::vector<double>& diffs, double level = 0.95);

double mean_of(const std::vector<double>& xs);
double sample_sd(const std::vector<double>& xs);

}  // namespace figlab
