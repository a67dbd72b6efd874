#pragma once
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "figlab/dmie.hpp"

namespace figlab {

// Generator recipe. By default the truth is the canonical pairwise
// layout x0*x1 + ... + x_{2p-2}*x_{2p-1} + x_{2p} + ... + x_{2p+q-1};
// an explicit expression overrides it (p/q are then ignored).
struct SyntheticSpec {
  int p = 2;
  int q = 2;
  long n = 10000;
  double noise_scale = 0.1;
  // Feature column j is drawn from a stream seeded feature_seed_offset + j;
  // the noise stream is seeded noise_seed.
  std::uint64_t feature_seed_offset = 0;
  std::uint64_t noise_seed = 0;
  double train_fraction = 0.7;
  std::optional<DmieExpression> truth;

  int dim() const;
  std::string key() const;  // canonical one-line description
};

struct SyntheticDataset {
  SyntheticSpec spec;
  DmieExpression truth;
  int d = 0;
  long n = 0;
  long train_n = 0;
  std::vector<double> features;  // row-major n x d
  std::vector<double> targets;   // n
  double sigma_f = 0;            // std of truth values over the sample

  std::span<const double> row(long i) const {
    return {features.data() + i * d, static_cast<std::size_t>(d)};
  }
  long test_n() const { return n - train_n; }
};

DmieExpression pairwise_layout(int p, int q);

// Sum over terms of the product of the row entries at the term indices.
double evaluate_truth(const DmieExpression& e, std::span<const double> row);

// Two-pass generation: draw features, measure sigma_f over the sample,
// then add noise_scale * sigma_f * z with z standard normal from the
// noise stream. Bit-deterministic for equal specs.
SyntheticDataset generate(const SyntheticSpec& spec);

// Minimal achievable MAE under the additive centered Gaussian noise:
// noise_scale * sigma_f * sqrt(2/pi).
double noise_mae_floor(const SyntheticDataset& ds);

// CSV with header x0..x{d-1},y plus a JSON sidecar (spec, sigma_f,
// split boundary) at csv_path + ".json".
void save_dataset_csv(const SyntheticDataset& ds, const std::string& csv_path);
SyntheticDataset load_dataset_csv(const std::string& csv_path);

}  // namespace figlab
