#include "figlab/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>

namespace figlab {

double student_t_quantile(double probability, int dof) {
  if (dof < 1) throw std::invalid_argument("student_t_quantile: dof must be >= 1");
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, probability);
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty input");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_sd: need at least two values");
  const double m = mean_of(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

PairedSummary one_sided_lower_bound(const std::vector<double>& diffs, double level) {
  if (diffs.size() < 2)
    throw std::invalid_argument("one_sided_lower_bound: need at least two pairs");
  PairedSummary s;
  s.n = static_cast<long>(diffs.size());
  s.mean = mean_of(diffs);
  s.sd = sample_sd(diffs);
  const double t = student_t_quantile(level, static_cast<int>(s.n - 1));
  s.lower_95 = s.mean - t * s.sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

}  // namespace figlab
