#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "figlab/synth.hpp"
#include "testutil.hpp"

using namespace figlab;

TEST_CASE("evaluate_truth is plain sum-of-products arithmetic") {
  auto e = parse_expression("x0*x1 + x2");
  double row[] = {2, 3, 5};
  CHECK(evaluate_truth(e, {row, 3}) == doctest::Approx(11));
  CHECK(evaluate_truth(make_expression(3, {}), {row, 3}) == 0);
  double ones[] = {1, 1, 1};
  CHECK(evaluate_truth(parse_expression("x0*x1*x2"), {ones, 3}) == 1);
  CHECK_THROWS_AS(evaluate_truth(parse_expression("x0*x4"), {row, 3}), std::out_of_range);
}

TEST_CASE("pairwise layout and split sizes") {
  SyntheticSpec spec;
  spec.p = 2;
  spec.q = 2;
  spec.n = 10000;
  auto ds = generate(spec);
  CHECK(ds.d == 6);
  CHECK(ds.train_n == 7000);
  CHECK(ds.test_n() == 3000);
  CHECK(to_string(ds.truth) == "x0*x1 + x2*x3 + x4 + x5");
  CHECK_THROWS_AS(generate(SyntheticSpec{2, 2, 5}), std::invalid_argument);
}

TEST_CASE("identity function with zero noise") {
  SyntheticSpec spec;
  spec.p = 0;
  spec.q = 1;
  spec.n = 100;
  spec.noise_scale = 0;
  auto ds = generate(spec);
  for (long i = 0; i < ds.n; ++i)
    CHECK(ds.targets[static_cast<std::size_t>(i)] == ds.features[static_cast<std::size_t>(i)]);
}

TEST_CASE("sigma_f matches the analytic population value") {
  // var(x*y) = 1 for independent standard normals, so var f = p + q.
  SyntheticSpec spec;
  spec.p = 2;
  spec.q = 2;
  spec.n = 10000;
  auto ds = generate(spec);
  CHECK(ds.sigma_f == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("noise_mae_floor equals the mean absolute noise draw") {
  SyntheticSpec spec;
  spec.p = 2;
  spec.q = 2;
  spec.n = 10000;
  auto ds = generate(spec);
  const double floor = noise_mae_floor(ds);
  CHECK(floor == doctest::Approx(0.1 * ds.sigma_f * std::sqrt(2.0 / std::numbers::pi)));
  CHECK(floor == doctest::Approx(0.1596).epsilon(0.03));

  // oracle: mean |target - f(x)| over the generated rows
  double mean_abs = 0;
  for (long i = 0; i < ds.n; ++i)
    mean_abs += std::abs(ds.targets[static_cast<std::size_t>(i)] - evaluate_truth(ds.truth, ds.row(i)));
  mean_abs /= static_cast<double>(ds.n);
  CHECK(floor == doctest::Approx(mean_abs).epsilon(0.03));

  SyntheticSpec silent = spec;
  silent.noise_scale = 0;
  CHECK(noise_mae_floor(generate(silent)) == 0);

  SyntheticSpec wide;
  wide.p = 10;
  wide.q = 2;
  wide.n = 10000;
  auto wide_ds = generate(wide);
  CHECK(noise_mae_floor(wide_ds) == doctest::Approx(0.1 * std::sqrt(12.0) * 0.7979).epsilon(0.03));
}

TEST_CASE("generation is bit-deterministic") {
  SyntheticSpec spec;
  spec.p = 1;
  spec.q = 2;
  spec.n = 500;
  auto a = generate(spec);
  auto b = generate(spec);
  CHECK(a.features == b.features);
  CHECK(a.targets == b.targets);
  CHECK(a.sigma_f == b.sigma_f);

  SyntheticSpec other = spec;
  other.feature_seed_offset = 1;
  CHECK(generate(other).features != a.features);
}

TEST_CASE("feature columns are standard normal at n = 10000") {
  SyntheticSpec spec;
  spec.p = 2;
  spec.q = 2;
  spec.n = 10000;
  auto ds = generate(spec);
  for (int j = 0; j < ds.d; ++j) {
    double mean = 0, var = 0;
    for (long i = 0; i < ds.n; ++i) mean += ds.features[static_cast<std::size_t>(i * ds.d + j)];
    mean /= static_cast<double>(ds.n);
    for (long i = 0; i < ds.n; ++i) {
      const double dv = ds.features[static_cast<std::size_t>(i * ds.d + j)] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(ds.n);
    CHECK(std::abs(mean) < 0.05);
    CHECK(var > 0.9);
    CHECK(var < 1.1);
  }
}

TEST_CASE("target residual scale tracks noise_scale * sigma_f") {
  SyntheticSpec spec;
  spec.p = 2;
  spec.q = 2;
  spec.n = 10000;
  auto ds = generate(spec);
  double var = 0;
  for (long i = 0; i < ds.n; ++i) {
    const double r = ds.targets[static_cast<std::size_t>(i)] - evaluate_truth(ds.truth, ds.row(i));
    var += r * r;
  }
  const double sd = std::sqrt(var / static_cast<double>(ds.n));
  CHECK(sd == doctest::Approx(0.1 * ds.sigma_f).epsilon(0.05));
}

TEST_CASE("explicit truth expression overrides the layout") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.noise_scale = 0;
  spec.truth = parse_expression("x1*x3 + x0 + x2", 5);
  auto ds = generate(spec);
  CHECK(ds.d == 5);
  for (long i = 0; i < ds.n; i += 37)
    CHECK(ds.targets[static_cast<std::size_t>(i)] ==
          doctest::Approx(evaluate_truth(ds.truth, ds.row(i))));
}

TEST_CASE("csv round trip preserves every value") {
  testutil::TempDir tmp("synth");
  SyntheticSpec spec;
  spec.p = 1;
  spec.q = 1;
  spec.n = 50;
  auto ds = generate(spec);
  const auto path = (tmp.path / "data.csv").string();
  save_dataset_csv(ds, path);
  auto loaded = load_dataset_csv(path);
  CHECK(loaded.features == ds.features);
  CHECK(loaded.targets == ds.targets);
  CHECK(loaded.train_n == ds.train_n);
  CHECK(loaded.sigma_f == ds.sigma_f);
  CHECK(loaded.truth == ds.truth);
}
