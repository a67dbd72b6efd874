#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "figlab/diff.hpp"
#include "figlab/rng.hpp"
#include "testutil.hpp"

using namespace figlab;
using diff::Shape;
using diff::Tape;
using diff::Tensor;

namespace {

diff::IndexVec ids(std::vector<int> v) {
  return std::make_shared<const std::vector<int>>(std::move(v));
}

}  // namespace

TEST_CASE("forward primitives basic arithmetic") {
  Tape tape;
  auto pred = tape.constant({2, 1}, {1, 2});
  auto target = tape.constant({2, 1}, {1, 2});
  CHECK(tape.mse(pred, target).scalar() == 0);

  auto x = tape.constant({1, 2}, {-3, 3});
  auto r = tape.relu(x);
  CHECK(r.values()[0] == 0);
  CHECK(r.values()[1] == 3);

  auto identity = tape.constant({2, 2}, {1, 0, 0, 1});
  auto a = tape.constant({2, 2}, {1, 2, 3, 4});
  auto product = tape.matmul(identity, a);
  CHECK(std::vector<double>(product.values().begin(), product.values().end()) ==
        std::vector<double>{1, 2, 3, 4});

  auto scaled = tape.scale(a, 0.5);
  CHECK(scaled.values()[3] == 2);

  auto cat = tape.concat_cols(a, identity);
  CHECK(cat.cols() == 4);
  CHECK(cat.value_at(1, 2) == 0);

  CHECK_THROWS_AS(tape.matmul(a, tape.constant({3, 1}, {1, 2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(tape.add(a, tape.constant({1, 1}, {1})), std::invalid_argument);
}

TEST_CASE("segment_softmax weights") {
  Tape tape;
  auto lone = tape.segment_softmax(tape.constant({1, 1}, {5}), ids({0}), 1);
  CHECK(lone.values()[0] == doctest::Approx(1.0));

  auto even = tape.segment_softmax(tape.constant({2, 1}, {0.7, 0.7}), ids({0, 0}), 1);
  CHECK(even.values()[0] == doctest::Approx(0.5));
  CHECK(even.values()[1] == doctest::Approx(0.5));

  auto skew = tape.segment_softmax(tape.constant({2, 1}, {0.0, std::log(3.0)}), ids({0, 0}), 1);
  CHECK(skew.values()[0] == doctest::Approx(0.25));
  CHECK(skew.values()[1] == doctest::Approx(0.75));
}

TEST_CASE("segment_softmax sums to one and ignores constant shifts") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int arcs = 1 + static_cast<int>(bounded_rand(rng, 12));
    const int segments = 1 + static_cast<int>(bounded_rand(rng, 4));
    std::vector<double> scores(static_cast<std::size_t>(arcs));
    std::vector<int> seg(static_cast<std::size_t>(arcs));
    for (int i = 0; i < arcs; ++i) {
      scores[static_cast<std::size_t>(i)] = 4 * uniform_unit(rng) - 2;
      seg[static_cast<std::size_t>(i)] = static_cast<int>(bounded_rand(rng, segments));
    }
    Tape tape;
    auto w = tape.segment_softmax(tape.constant({arcs, 1}, scores), ids(seg), segments);
    std::vector<double> sums(static_cast<std::size_t>(segments), 0.0);
    std::vector<bool> occupied(static_cast<std::size_t>(segments), false);
    for (int i = 0; i < arcs; ++i) {
      sums[static_cast<std::size_t>(seg[static_cast<std::size_t>(i)])] +=
          w.values()[static_cast<std::size_t>(i)];
      occupied[static_cast<std::size_t>(seg[static_cast<std::size_t>(i)])] = true;
    }
    for (int s = 0; s < segments; ++s)
      if (occupied[static_cast<std::size_t>(s)])
        CHECK(std::abs(sums[static_cast<std::size_t>(s)] - 1.0) < 1e-12);

    auto shifted = scores;
    for (auto& v : shifted) v += 3.25;
    auto w2 = tape.segment_softmax(tape.constant({arcs, 1}, shifted), ids(seg), segments);
    for (int i = 0; i < arcs; ++i)
      CHECK(w.values()[static_cast<std::size_t>(i)] ==
            doctest::Approx(w2.values()[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("segment_sum basics and arc-order invariance") {
  Tape tape;
  auto copy = tape.segment_sum(tape.constant({1, 2}, {3, 4}), ids({0}), 2);
  CHECK(copy.value_at(0, 0) == 3);
  CHECK(copy.value_at(1, 0) == 0);  // empty segment stays zero

  auto summed = tape.segment_sum(tape.constant({2, 2}, {1, 0, 0, 1}), ids({0, 0}), 1);
  CHECK(summed.value_at(0, 0) == 1);
  CHECK(summed.value_at(0, 1) == 1);

  std::vector<double> rows = {1.5, -2, 0.25, 4, 3, -1, 0.5, 2};
  std::vector<int> seg = {1, 0, 1, 0};
  auto base = tape.segment_sum(tape.constant({4, 2}, rows), ids(seg), 2);
  std::vector<int> perm = {2, 0, 3, 1};
  std::vector<double> shuffled_rows;
  std::vector<int> shuffled_seg;
  for (int p : perm) {
    shuffled_rows.push_back(rows[static_cast<std::size_t>(2 * p)]);
    shuffled_rows.push_back(rows[static_cast<std::size_t>(2 * p + 1)]);
    shuffled_seg.push_back(seg[static_cast<std::size_t>(p)]);
  }
  auto shuffled = tape.segment_sum(tape.constant({4, 2}, shuffled_rows), ids(shuffled_seg), 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      CHECK(base.value_at(r, c) == doctest::Approx(shuffled.value_at(r, c)));
}

TEST_CASE("batch_norm forward modes") {
  Tape tape;
  diff::BatchNormState state(2);
  auto gamma = tape.constant({1, 2}, {1, 1});
  auto beta = tape.constant({1, 2}, {0, 0});

  // constant column normalizes to zero before scale/shift
  auto constant_col = tape.constant({3, 2}, {5, -1, 5, 1, 5, 3});
  auto out = tape.batch_norm(constant_col, gamma, beta, state, true);
  CHECK(out.value_at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(out.value_at(1, 0) == doctest::Approx(0.0).epsilon(1e-9));

  // column [-1, 1] maps to roughly itself
  diff::BatchNormState fresh(1);
  auto two = tape.constant({2, 1}, {-1, 1});
  auto normed =
      tape.batch_norm(two, tape.constant({1, 1}, {1}), tape.constant({1, 1}, {0}), fresh, true);
  CHECK(normed.value_at(0, 0) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(normed.value_at(1, 0) == doctest::Approx(1.0).epsilon(1e-4));

  // eval with unit running stats is the identity
  diff::BatchNormState unit_state(2);
  auto data = tape.constant({2, 2}, {0.5, -2, 3, 0.125});
  auto same = tape.batch_norm(data, gamma, beta, unit_state, false);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      CHECK(same.value_at(r, c) == doctest::Approx(data.value_at(r, c)).epsilon(1e-5));

  diff::BatchNormState tiny(2);
  auto one_row = tape.constant({1, 2}, {1, 2});
  CHECK_THROWS_AS(tape.batch_norm(one_row, gamma, beta, tiny, true), std::invalid_argument);
}

TEST_CASE("batch_norm updates running statistics with momentum 0.1") {
  Tape tape;
  diff::BatchNormState state(1);
  auto gamma = tape.constant({1, 1}, {1});
  auto beta = tape.constant({1, 1}, {0});
  auto batch = tape.constant({4, 1}, {1, 3, 5, 7});  // mean 4, unbiased var 20/3
  tape.batch_norm(batch, gamma, beta, state, true);
  CHECK(state.running_mean[0] == doctest::Approx(0.9 * 0 + 0.1 * 4));
  CHECK(state.running_var[0] == doctest::Approx(0.9 * 1 + 0.1 * (20.0 / 3)));
}

TEST_CASE("backward: product rule and constant losses") {
  Tape tape;
  auto x = tape.leaf({1, 1}, {2}, true);
  auto y = tape.leaf({1, 1}, {3}, true);
  auto loss = tape.mul(x, y);
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(3));
  CHECK(y.grad()[0] == doctest::Approx(2));

  Tape tape2;
  auto unused = tape2.leaf({2, 1}, {1, 1}, true);
  auto constant_loss =
      tape2.mse(tape2.constant({2, 1}, {1, 2}), tape2.constant({2, 1}, {3, 4}));
  tape2.backward(constant_loss);
  CHECK(unused.grad()[0] == 0);
  CHECK(unused.grad()[1] == 0);

  CHECK_THROWS_AS(tape2.backward(tape2.constant({2, 1}, {1, 2})), std::invalid_argument);
}

TEST_CASE("composite graph gradients match central finite differences") {
  // Exercises matmul, add_row, concat, relu, gather, segment softmax/sum,
  // scale_rows, row_dot, group mean, batch norm (train) and mse together.
  std::mt19937_64 rng(31);
  std::vector<double> w1(4 * 3), w2(3 * 2), bias(3), score_w(3), input_data(4 * 4);
  for (auto* vec : {&w1, &w2, &bias, &score_w, &input_data})
    for (auto& v : *vec) v = 2 * uniform_unit(rng) - 1;

  auto segments = ids({0, 1, 1, 3});
  auto gathered = ids({0, 1, 1, 0});

  struct Built {
    Tensor loss, w1, w2, bias, score_w;
  };
  auto build = [&](Tape& tape, bool want_grads) {
    diff::BatchNormState local(2);
    Built out;
    auto input = tape.constant({4, 4}, input_data);
    out.w1 = tape.leaf({4, 3}, w1, want_grads);
    out.bias = tape.leaf({1, 3}, bias, want_grads);
    auto h = tape.relu(tape.add_row(tape.matmul(input, out.w1), out.bias));  // 4x3
    out.score_w = tape.leaf({3, 1}, score_w, want_grads);
    auto scores = tape.scale(tape.matmul(tape.gather_rows(h, gathered), out.score_w), 0.75);
    auto weights = tape.segment_softmax(scores, segments, 4);
    auto msgs = tape.scale_rows(tape.gather_rows(h, gathered), weights);
    auto agg = tape.segment_sum(msgs, segments, 4);  // 4x3
    out.w2 = tape.leaf({3, 2}, w2, want_grads);
    auto z = tape.matmul(tape.add(agg, h), out.w2);  // 4x2
    auto gamma = tape.constant({1, 2}, {1.2, 0.8});
    auto beta = tape.constant({1, 2}, {0.1, -0.2});
    auto normed = tape.batch_norm(z, gamma, beta, local, true);
    auto pooled = tape.group_mean_rows(tape.relu(normed), 2);  // 2x2
    auto per_row = tape.row_dot(pooled, tape.constant({2, 2}, {1, -1, 0.5, 2}));
    auto pred = tape.reshape(tape.mean_over_rows(per_row), {1, 1});
    out.loss = tape.mse(pred, tape.constant({1, 1}, {0.37}));
    return out;
  };

  auto eval = [&]() {
    Tape tape;
    return build(tape, false).loss.scalar();
  };

  Tape tape;
  auto built = build(tape, true);
  tape.backward(built.loss);

  auto check_param = [&](std::vector<double>& buffer, Tensor leaf) {
    auto numeric = testutil::finite_difference(buffer, eval);
    auto analytic = leaf.grad();
    REQUIRE(analytic.size() == numeric.size());
    for (std::size_t i = 0; i < numeric.size(); ++i)
      CHECK(testutil::rel_error(analytic[i], numeric[i]) < 1e-4);
  };
  check_param(w1, built.w1);
  check_param(w2, built.w2);
  check_param(bias, built.bias);
  check_param(score_w, built.score_w);
}

TEST_CASE("non-finite values are trapped with the op name") {
  Tape tape;
  auto big = tape.constant({1, 1}, {1e308});
  CHECK_THROWS_AS(tape.scale(big, 10), diff::NonFiniteError);
  CHECK_THROWS_AS(tape.constant({1, 1}, {std::nan("")}), diff::NonFiniteError);
  try {
    tape.mul(big, big);
    FAIL("expected NonFiniteError");
  } catch (const diff::NonFiniteError& e) {
    CHECK(std::string(e.what()).find("mul") != std::string::npos);
  }
}

TEST_CASE("adam: zero grads hold still, constant grads march downhill") {
  diff::Parameter p("p", {1, 2});
  p.value = {1.0, -2.0};
  std::vector<diff::Parameter*> params{&p};
  diff::AdamState state;
  diff::adam_init(state, params);
  state.lr = 0.05;

  std::vector<double> zero{0, 0};
  diff::adam_step(params, {std::span<const double>(zero)}, state);
  CHECK(p.value[0] == 1.0);
  CHECK(p.value[1] == -2.0);

  // first step with unit gradient moves by about -lr (bias correction ~ 1)
  diff::AdamState fresh;
  diff::adam_init(fresh, params);
  fresh.lr = 0.05;
  std::vector<double> ones{1, 1};
  const double before = p.value[0];
  diff::adam_step(params, {std::span<const double>(ones)}, fresh);
  CHECK(p.value[0] == doctest::Approx(before - 0.05).epsilon(1e-6));

  // constant positive gradient keeps decreasing the parameter
  for (int i = 0; i < 50; ++i)
    diff::adam_step(params, {std::span<const double>(ones)}, fresh);
  CHECK(p.value[0] < before - 0.05);
}
