#include <cmath>
#include <limits>
#include <sstream>

#include "compresslab/checkpoint.h"
#include "compresslab/random.h"
#include "compresslab/tensor.h"
#include "doctest.h"
#include "support.h"

using namespace compresslab;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

// Central-difference check of d(build(params))/d(params).
template <typename Build>
double max_grad_error(std::vector<Parameter>& params, Build build, double eps = 1e-5) {
  for (auto& p : params) p.zero_grad();
  {
    Graph graph;
    graph.backward(build(graph));
  }
  double worst = 0.0;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      auto eval = [&](double v) {
        p.value[i] = v;
        Graph graph(false);
        return graph.value(build(graph))[0];
      };
      const double numeric = (eval(saved + eps) - eval(saved - eps)) / (2 * eps);
      p.value[i] = saved;
      const double a = p.grad[i];
      worst = std::max(worst, std::abs(a - numeric) /
                                  std::max({std::abs(a), std::abs(numeric), 1e-6}));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("forward op examples") {
  Graph graph;
  CHECK(graph.value(graph.sigmoid(graph.constant(Tensor::scalar(0.0))))[0] == 0.5);

  Rng rng(1);
  const Tensor x = random_tensor({3, 4}, rng);
  Tensor identity({4, 4});
  for (std::size_t i = 0; i < 4; ++i) identity.at(i, i) = 1.0;
  const Var y = graph.linear(graph.constant(x), graph.constant(identity),
                             graph.constant(Tensor({4}, 0.0)));
  CHECK(graph.value(y) == x);

  const Tensor table = random_tensor({5, 3}, rng);
  const std::size_t ids[] = {2};
  const Tensor row = graph.value(graph.embed(graph.constant(table), ids));
  REQUIRE(row.shape() == Shape{1, 3});
  for (std::size_t c = 0; c < 3; ++c) CHECK(row.at(0, c) == table.at(2, c));
}

TEST_CASE("shape errors name the op and shapes") {
  Graph graph;
  const Var a = graph.constant(Tensor({2, 3}));
  const Var b = graph.constant(Tensor({2, 3}));
  try {
    graph.matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    CHECK(what.find("matmul") != std::string::npos);
    CHECK(what.find("[2,3]") != std::string::npos);
  }
  CHECK_THROWS_AS(graph.add(a, graph.constant(Tensor({3, 2}))), ShapeError);
}

TEST_CASE("bce loss examples and scalar oracle") {
  Graph graph;
  const Var half = graph.constant(Tensor({1, 1}, 0.5));
  CHECK(graph.value(graph.bce_loss(half, Tensor({1, 1}, 1.0), Tensor({1, 1}, 1.0)))[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const Var almost = graph.constant(Tensor({1, 1}, 1.0 - 1e-7));
  const double clamped = graph.value(graph.bce_loss(almost, Tensor({1, 1}, 1.0), Tensor({1, 1}, 1.0)))[0];
  CHECK(std::isfinite(clamped));
  CHECK(clamped == doctest::Approx(1e-7).epsilon(1e-6));
  const Var one = graph.constant(Tensor({1, 1}, 1.0));
  CHECK(std::isfinite(graph.value(graph.bce_loss(one, Tensor({1, 1}, 0.0), Tensor({1, 1}, 1.0)))[0]));

  Rng rng(9);
  for (int round = 0; round < 50; ++round) {
    Tensor s({8, 1}), y({8, 1}), mask({8, 1});
    for (std::size_t i = 0; i < 8; ++i) {
      s[i] = rng.uniform();
      y[i] = rng.bernoulli(0.5);
      mask[i] = i == 0 || rng.bernoulli(0.7);
    }
    double total = 0.0, count = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      if (mask[i] == 0.0) continue;
      const double c = std::min(std::max(s[i], 1e-7), 1.0 - 1e-7);
      total += -(y[i] * std::log(c) + (1 - y[i]) * std::log(1 - c));
      count += 1.0;
    }
    Graph g;
    CHECK(std::abs(g.value(g.bce_loss(g.constant(s), y, mask))[0] - total / count) < 1e-12);
  }
  CHECK_THROWS(graph.bce_loss(half, Tensor({1, 1}, 1.0), Tensor({1, 1}, 0.0)));
}

TEST_CASE("backward: sum(W x) and unused parameters") {
  Rng rng(2);
  Parameter w("w", random_tensor({3, 4}, rng));
  Parameter unused("unused", random_tensor({2, 2}, rng));
  const Tensor x = random_tensor({4, 2}, rng);
  Graph graph;
  graph.param(unused);
  const Var loss = graph.sum(graph.matmul(graph.param(w), graph.constant(x)));
  graph.backward(loss);
  // d/dW_ij sum_k (W x)_ik = sum_k x_jk
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(w.grad.at(i, j) == doctest::Approx(x.at(j, 0) + x.at(j, 1)).epsilon(1e-14));
  for (double g : unused.grad.values()) CHECK(g == 0.0);
  CHECK_THROWS(graph.backward(loss));
  graph.reset();
  const Var again = graph.sum(graph.param(w));
  CHECK_NOTHROW(graph.backward(again));
}

TEST_CASE("frozen parameters receive no gradient") {
  Rng rng(3);
  Parameter w("w", random_tensor({2, 2}, rng));
  const Parameter& frozen = w;
  Graph graph;
  const Var loss = graph.sum(graph.param(frozen));
  graph.backward(loss);
  for (double g : w.grad.values()) CHECK(g == 0.0);
}

TEST_CASE("composite ops match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<Parameter> ps;
    ps.emplace_back("x", random_tensor({4, 5}, rng));
    ps.emplace_back("w", random_tensor({5, 3}, rng, 0.5));
    ps.emplace_back("b", random_tensor({3}, rng));
    ps.emplace_back("g", random_tensor({5}, rng));
    ps.emplace_back("beta", random_tensor({5}, rng));
    ps.emplace_back("t", random_tensor({6, 5}, rng));
    const std::size_t ids[] = {1, 4, 4, 0};
    const std::size_t rows[] = {3, 0, 2, 2, 1};
    auto build = [&](Graph& g) {
      Var x = g.param(ps[0]);
      Var e = g.embed(ps[5], ids);
      Var h = g.layer_norm(g.add(x, e), g.param(ps[3]), g.param(ps[4]));
      Var att = g.softmax_rows(g.scale(g.matmul_transposed(h, h), 0.4));
      Var mixed = g.matmul(att, h);
      Var both[] = {mixed, g.param(ps[0])};
      Var cat = g.concat_rows(both);
      Var picked = g.gather_rows(cat, rows);
      Var lin = g.linear(picked, g.param(ps[1]), g.param(ps[2]));
      Var cols[] = {lin, g.add_row(lin, g.param(ps[2]))};
      Var s = g.sigmoid(g.concat_cols(cols));
      Tensor labels(g.value(s).shape());
      for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 3 == 0;
      return g.bce_loss(s, labels, Tensor(labels.shape(), 1.0));
    };
    CHECK(max_grad_error(ps, build) < 1e-4);
  }
}

TEST_CASE("attention block matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 100);
    AttentionBlock block("blk", 6, rng);
    Parameter x("x", random_tensor({5, 6}, rng));
    std::vector<Parameter*> all = block.parameters();
    all.push_back(&x);
    for (Parameter* p : all) p->zero_grad();
    auto build = [&](Graph& g) { return g.sum(g.sigmoid(attention_block(g, g.param(x), block))); };
    {
      Graph g;
      g.backward(build(g));
    }
    double worst = 0.0;
    for (Parameter* p : all) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double saved = p->value[i];
        p->value[i] = saved + 1e-5;
        Graph up(false);
        const double u = up.value(build(up))[0];
        p->value[i] = saved - 1e-5;
        Graph down(false);
        const double d = down.value(build(down))[0];
        p->value[i] = saved;
        const double numeric = (u - d) / 2e-5;
        worst = std::max(worst, std::abs(p->grad[i] - numeric) /
                                    std::max({std::abs(p->grad[i]), std::abs(numeric), 1e-6}));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("ops stay finite on extreme in-contract inputs") {
  Graph graph;
  Tensor big({2, 3});
  big[0] = 700;
  big[1] = -700;
  big[2] = 1e6;
  big[3] = -1e6;
  const Var x = graph.constant(big);
  CHECK(graph.value(graph.sigmoid(x)).all_finite());
  CHECK(graph.value(graph.softmax_rows(x)).all_finite());
  CHECK(graph.value(graph.layer_norm(x, graph.constant(Tensor({3}, 1.0)),
                                     graph.constant(Tensor({3}, 0.0))))
            .all_finite());
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(graph.sigmoid(graph.constant(Tensor({1}, inf))), NumericError);
}

TEST_CASE("adam closed-form first step and scalar reference") {
  Parameter p("p", Tensor::scalar(1.0));
  Adam adam({&p}, AdamConfig{0.1});
  p.grad[0] = 1.0;
  adam.step(false);
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(p.grad[0] == 1.0);  // caller did not ask for zeroing
  CHECK(adam.steps() == 1);

  // zero gradients leave values alone
  Parameter q("q", Tensor({3}, 2.0));
  Adam still({&q});
  still.step();
  CHECK(q.value == Tensor({3}, 2.0));
  CHECK(still.steps() == 1);

  // two steps against a scalar implementation
  Parameter r("r", Tensor({2}, std::vector<double>{0.3, -1.2}));
  Adam two({&r}, AdamConfig{0.01, 0.9, 0.999, 1e-8});
  const double grads[2][2] = {{0.5, -2.0}, {-0.25, 3.0}};
  double value[2] = {0.3, -1.2}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 2; ++t) {
    for (int i = 0; i < 2; ++i) {
      r.grad[i] = grads[t - 1][i];
      m[i] = 0.9 * m[i] + 0.1 * grads[t - 1][i];
      v[i] = 0.999 * v[i] + 0.001 * grads[t - 1][i] * grads[t - 1][i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      value[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    two.step();
    for (double g : r.grad.values()) CHECK(g == 0.0);
  }
  CHECK(std::abs(r.value[0] - value[0]) < 1e-12);
  CHECK(std::abs(r.value[1] - value[1]) < 1e-12);
}

TEST_CASE("adam rejects non-finite gradients by name") {
  Parameter a("alpha", Tensor({1}, 1.0));
  Parameter b("beta", Tensor({1}, 1.0));
  Adam adam({&a, &b});
  a.grad[0] = 1.0;
  b.grad[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    adam.step();
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  CHECK(a.value[0] == 1.0);
}

TEST_CASE("seeded training steps are bit-identical") {
  auto run = [] {
    Rng rng(4);
    Parameter w("w", random_tensor({4, 3}, rng));
    Adam adam({&w}, AdamConfig{0.05});
    const Tensor x = random_tensor({5, 4}, rng);
    for (int k = 0; k < 10; ++k) {
      Graph g;
      g.backward(g.sum(g.sigmoid(g.matmul(g.constant(x), g.param(w)))));
      adam.step();
    }
    return w.value;
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip is bit-exact") {
  Rng rng(6);
  Parameter a("a", random_tensor({3, 4}, rng));
  Parameter b("b", random_tensor({7}, rng));
  a.value[0] = -0.0;
  a.value[1] = 1e-310;  // subnormal
  const Parameter* params[] = {&a, &b};
  std::stringstream buffer;
  write_checkpoint(buffer, R"({"echo":1})", params);
  const CheckpointContents contents = read_checkpoint(buffer);
  CHECK(contents.version == kCheckpointVersion);
  CHECK(contents.config == R"({"echo":1})");
  Parameter a2("a", Tensor({3, 4})), b2("b", Tensor({7}));
  Parameter* targets[] = {&a2, &b2};
  assign_parameters(contents, targets);
  CHECK(std::signbit(a2.value[0]));
  CHECK(a2.value == a.value);
  CHECK(b2.value == b.value);

  Parameter wrong("b", Tensor({8}));
  Parameter* mismatched[] = {&a2, &wrong};
  CHECK_THROWS(assign_parameters(contents, mismatched));
  std::stringstream garbage("NOTACKPT");
  CHECK_THROWS(read_checkpoint(garbage));
}
