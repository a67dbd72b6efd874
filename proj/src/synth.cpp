#include "figlab/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "figlab/rng.hpp"

namespace figlab {

using nlohmann::json;

int SyntheticSpec::dim() const { return truth ? truth->num_features : 2 * p + q; }

std::string SyntheticSpec::key() const {
  std::ostringstream out;
  out << "p=" << p << ";q=" << q << ";n=" << n << ";noise=" << noise_scale
      << ";fseed=" << feature_seed_offset << ";nseed=" << noise_seed
      << ";train=" << train_fraction;
  if (truth) out << ";truth=" << to_string(*truth);
  return out.str();
}

DmieExpression pairwise_layout(int p, int q) {
  if (p < 0 || q < 0) throw std::invalid_argument("pairwise_layout: negative p or q");
  std::vector<std::vector<int>> terms;
  for (int i = 0; i < p; ++i) terms.push_back({2 * i, 2 * i + 1});
  for (int i = 0; i < q; ++i) terms.push_back({2 * p + i});
  return make_expression(2 * p + q, std::move(terms));
}

double evaluate_truth(const DmieExpression& e, std::span<const double> row) {
  if (row.size() < static_cast<std::size_t>(e.num_features))
    throw std::out_of_range("evaluate_truth: row shorter than num_features");
  double sum = 0;
  for (const auto& term : e.terms) {
    double prod = 1;
    for (int idx : term) prod *= row[static_cast<std::size_t>(idx)];
    sum += prod;
  }
  return sum;
}

SyntheticDataset generate(const SyntheticSpec& spec) {
  if (spec.n < 10) throw std::invalid_argument("generate: need at least 10 rows for a split");
  if (spec.noise_scale < 0) throw std::invalid_argument("generate: negative noise_scale");
  if (spec.train_fraction <= 0 || spec.train_fraction >= 1)
    throw std::invalid_argument("generate: train_fraction must be in (0,1)");

  SyntheticDataset ds;
  ds.spec = spec;
  ds.truth = spec.truth ? *spec.truth : pairwise_layout(spec.p, spec.q);
  ds.d = ds.truth.num_features;
  ds.n = spec.n;
  ds.train_n = static_cast<long>(spec.train_fraction * static_cast<double>(spec.n));
  if (ds.train_n < 1 || ds.train_n >= ds.n)
    throw std::invalid_argument("generate: degenerate train/test split");

  ds.features.resize(static_cast<std::size_t>(ds.n) * static_cast<std::size_t>(ds.d));
  for (int j = 0; j < ds.d; ++j) {
    NormalSampler column(spec.feature_seed_offset + static_cast<std::uint64_t>(j));
    for (long i = 0; i < ds.n; ++i)
      ds.features[static_cast<std::size_t>(i) * static_cast<std::size_t>(ds.d) +
                  static_cast<std::size_t>(j)] = column.next();
  }

  std::vector<double> clean(static_cast<std::size_t>(ds.n));
  double mean = 0;
  for (long i = 0; i < ds.n; ++i) {
    clean[static_cast<std::size_t>(i)] = evaluate_truth(ds.truth, ds.row(i));
    mean += clean[static_cast<std::size_t>(i)];
  }
  mean /= static_cast<double>(ds.n);
  double var = 0;
  for (double f : clean) var += (f - mean) * (f - mean);
  var /= static_cast<double>(ds.n);
  ds.sigma_f = std::sqrt(var);

  ds.targets.resize(static_cast<std::size_t>(ds.n));
  NormalSampler noise(spec.noise_seed);
  for (long i = 0; i < ds.n; ++i)
    ds.targets[static_cast<std::size_t>(i)] =
        clean[static_cast<std::size_t>(i)] + spec.noise_scale * ds.sigma_f * noise.next();
  return ds;
}

double noise_mae_floor(const SyntheticDataset& ds) {
  return ds.spec.noise_scale * ds.sigma_f * std::sqrt(2.0 / std::numbers::pi);
}

namespace {

json spec_to_json(const SyntheticSpec& spec) {
  json j{{"p", spec.p},
         {"q", spec.q},
         {"n", spec.n},
         {"noise_scale", spec.noise_scale},
         {"feature_seed_offset", spec.feature_seed_offset},
         {"noise_seed", spec.noise_seed},
         {"train_fraction", spec.train_fraction}};
  if (spec.truth) j["truth"] = to_string(*spec.truth);
  return j;
}

SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec spec;
  spec.p = j.at("p").get<int>();
  spec.q = j.at("q").get<int>();
  spec.n = j.at("n").get<long>();
  spec.noise_scale = j.at("noise_scale").get<double>();
  spec.feature_seed_offset = j.at("feature_seed_offset").get<std::uint64_t>();
  spec.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  spec.train_fraction = j.at("train_fraction").get<double>();
  if (j.contains("truth")) spec.truth = parse_expression(j.at("truth").get<std::string>());
  return spec;
}

}  // namespace

void save_dataset_csv(const SyntheticDataset& ds, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("save_dataset_csv: cannot open " + csv_path);
  for (int j = 0; j < ds.d; ++j) out << "x" << j << ",";
  out << "y\n";
  char buf[40];
  for (long i = 0; i < ds.n; ++i) {
    for (int j = 0; j < ds.d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.features[static_cast<std::size_t>(i * ds.d + j)]);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", ds.targets[static_cast<std::size_t>(i)]);
    out << buf << "\n";
  }
  out.close();

  json sidecar{{"spec", spec_to_json(ds.spec)},
               {"truth", to_string(ds.truth)},
               {"d", ds.d},
               {"n", ds.n},
               {"train_n", ds.train_n},
               {"sigma_f", ds.sigma_f}};
  std::ofstream side(csv_path + ".json");
  if (!side) throw std::runtime_error("save_dataset_csv: cannot open " + csv_path + ".json");
  side << sidecar.dump(2) << "\n";
}

SyntheticDataset load_dataset_csv(const std::string& csv_path) {
  std::ifstream side(csv_path + ".json");
  if (!side) throw std::runtime_error("load_dataset_csv: missing sidecar " + csv_path + ".json");
  json sidecar = json::parse(side);

  SyntheticDataset ds;
  ds.spec = spec_from_json(sidecar.at("spec"));
  ds.truth = parse_expression(sidecar.at("truth").get<std::string>());
  ds.d = sidecar.at("d").get<int>();
  ds.n = sidecar.at("n").get<long>();
  ds.train_n = sidecar.at("train_n").get<long>();
  ds.sigma_f = sidecar.at("sigma_f").get<double>();

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("load_dataset_csv: cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_dataset_csv: empty file");
  ds.features.reserve(static_cast<std::size_t>(ds.n) * static_cast<std::size_t>(ds.d));
  ds.targets.reserve(static_cast<std::size_t>(ds.n));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ls, field, ',')) vals.push_back(std::stod(field));
    if (static_cast<int>(vals.size()) != ds.d + 1)
      throw std::runtime_error("load_dataset_csv: wrong column count");
    for (int j = 0; j < ds.d; ++j) ds.features.push_back(vals[static_cast<std::size_t>(j)]);
    ds.targets.push_back(vals.back());
  }
  if (static_cast<long>(ds.targets.size()) != ds.n)
    throw std::runtime_error("load_dataset_csv: row count mismatch with sidecar");
  return ds;
}

}  // namespace figlab
