#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "choir/ad/attention.hpp"
#include "choir/ad/gradcheck.hpp"
#include "choir/ad/ops.hpp"
#include "choir/ad/optim.hpp"
#include "choir/error.hpp"
#include "choir/nn/layers.hpp"

using namespace choir;
using namespace choir::ad;

namespace {

Tensor random_param(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor::parameter(std::move(shape), std::move(v));
}

Tensor random_const(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor::constant(std::move(shape), std::move(v));
}

std::vector<double> grad_of(const std::function<Tensor()>& f, Tensor& x) {
  x.zero_grad();
  Graph g;
  GraphScope s(g);
  Tensor l = f();
  g.backward(l);
  return {x.grad().begin(), x.grad().end()};
}

// Central differences written out directly, independent of gradcheck.cpp.
std::vector<double> central_diff(const std::function<Tensor()>& f, Tensor& x, double h = 1e-5) {
  NoGradScope ng;
  std::vector<double> out(x.size());
  auto v = x.mutable_values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x0 = v[i];
    v[i] = x0 + h;
    const double fp = f().item();
    v[i] = x0 - h;
    const double fm = f().item();
    v[i] = x0;
    out[i] = (fp - fm) / (2 * h);
  }
  return out;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]) / std::max(1e-8, std::fabs(b[i])));
  return m;
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  Tensor y = softmax_rows(Tensor::constant({1, 2}, {0.0, 0.0}));
  CHECK(y.values()[0] == 0.5);
  CHECK(y.values()[1] == 0.5);
}

TEST_CASE("row concatenation of a token and a feature block") {
  Tensor token = Tensor::zeros({1, 4});
  Tensor block = Tensor::full({6, 4}, 1.0);
  Tensor c = concat({token, block}, Axis::Rows);
  CHECK(c.shape() == Shape{7, 4});
  CHECK(c.at(0, 0) == 0.0);
  CHECK(c.at(1, 3) == 1.0);
}

TEST_CASE("derivative of x*x at 3 is 6") {
  Tensor x = Tensor::parameter({1}, {3.0});
  Graph g;
  GraphScope s(g);
  Tensor y = mul(x, x);
  g.backward(y);
  CHECK(x.grad()[0] == 6.0);
}

TEST_CASE("gradient of a linear map is its input") {
  Tensor x = Tensor::constant({1, 2}, {1.0, 2.0});
  Tensor w = Tensor::parameter({2, 1}, {0.3, -0.7});
  Graph g;
  GraphScope s(g);
  g.backward(sum(matmul(x, w)));
  CHECK(w.grad()[0] == 1.0);
  CHECK(w.grad()[1] == 2.0);
}

TEST_CASE("cross-entropy gradient at uniform logits") {
  Tensor logits = Tensor::parameter({1, 2}, {0.0, 0.0});
  Graph g;
  GraphScope s(g);
  Tensor loss = neg(slice(log_softmax_rows(logits), Axis::Cols, 0, 1));
  g.backward(loss);
  CHECK(logits.grad()[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(logits.grad()[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("three-layer MLP gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    nn::ParameterSet ps;
    nn::Mlp mlp(ps, "mlp", {5, 7, 6, 3}, rng);
    Tensor x = random_const({4, 5}, rng);
    auto f = [&] { return sum(mul(mlp(x), mlp(x))); };
    auto params = ps.tensors();
    auto report = gradient_check(f, params, 1e-5);
    CHECK(report.max_relative_error < 1e-4);
  }
}

TEST_CASE("every primitive matches central differences over 20 seeds") {
  using Unary = std::function<Tensor(const Tensor&)>;
  const std::vector<std::pair<const char*, Unary>> prims = {
      {"add", [](const Tensor& x) { return add(x, Tensor::constant({1, 3}, {0.1, -0.2, 0.3})); }},
      {"sub", [](const Tensor& x) { return sub(Tensor::scalar(0.5), x); }},
      {"mul", [](const Tensor& x) { return mul(x, x); }},
      {"div", [](const Tensor& x) { return div(x, add_scalar(mul(x, x), 0.5)); }},
      {"scale", [](const Tensor& x) { return scale(x, -1.7); }},
      {"matmul", [](const Tensor& x) { return matmul(x, transpose(x)); }},
      {"matmul_nt", [](const Tensor& x) { return matmul_nt(x, x); }},
      {"softmax", [](const Tensor& x) { return softmax_rows(x); }},
      {"log_softmax", [](const Tensor& x) { return log_softmax_rows(x); }},
      {"layer_norm", [](const Tensor& x) { return layer_norm_rows(x); }},
      {"gelu", [](const Tensor& x) { return gelu(x); }},
      {"sigmoid", [](const Tensor& x) { return sigmoid(x); }},
      {"log", [](const Tensor& x) { return log(add_scalar(mul(x, x), 0.5)); }},
      {"exp", [](const Tensor& x) { return exp(x); }},
      {"sqrt", [](const Tensor& x) { return sqrt(add_scalar(mul(x, x), 0.5)); }},
      {"concat_rows", [](const Tensor& x) { return concat({x, scale(x, 2.0)}, Axis::Rows); }},
      {"concat_cols", [](const Tensor& x) { return concat({x, mul(x, x)}, Axis::Cols); }},
      {"slice_cols", [](const Tensor& x) { return slice(x, Axis::Cols, 1, 2); }},
      {"slice_rows", [](const Tensor& x) { return slice(x, Axis::Rows, 1, 2); }},
      {"gather", [](const Tensor& x) {
         std::vector<std::size_t> idx{3, 0, 0, 2};
         return gather_rows(x, idx);
       }},
      {"sum_rows", [](const Tensor& x) { return sum(x, Axis::Rows); }},
      {"sum_cols", [](const Tensor& x) { return sum(x, Axis::Cols); }},
      {"mean", [](const Tensor& x) { return mean(x); }},
      {"max_pool", [](const Tensor& x) { return max_pool_groups(x, 2); }},
      {"max_rows", [](const Tensor& x) { return max_rows(x); }},
      {"transpose", [](const Tensor& x) { return transpose(x); }},
      {"reshape", [](const Tensor& x) { return reshape(x, {3, 4}); }},
  };
  for (const auto& [name, op] : prims) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed * 97 + 1);
      Tensor x = random_param({4, 3}, rng);
      Tensor w = random_const({1}, rng);
      // Random projection of the output keeps every coordinate in play.
      auto f = [&]() {
        Tensor y = op(x);
        std::mt19937_64 r2(seed);
        Tensor proj = random_const(y.shape(), r2);
        return sum(mul(y, proj));
      };
      (void)w;
      const auto analytic = grad_of(f, x);
      const auto numeric = central_diff(f, x);
      INFO(name << " seed " << seed);
      CHECK(max_rel(analytic, numeric) < 1e-4);
    }
  }
}

TEST_CASE("softmax rows sum to one and layer-norm rows are standardized") {
  std::mt19937_64 rng(7);
  Tensor x = random_const({16, 9}, rng, -5.0, 5.0);
  Tensor s = softmax_rows(x);
  Tensor n = layer_norm_rows(x);
  for (std::size_t r = 0; r < 16; ++r) {
    double total = 0, mu = 0, var = 0;
    for (std::size_t c = 0; c < 9; ++c) {
      total += s.at(r, c);
      mu += n.at(r, c);
    }
    mu /= 9;
    for (std::size_t c = 0; c < 9; ++c) var += (n.at(r, c) - mu) * (n.at(r, c) - mu);
    var /= 9;
    CHECK(std::fabs(total - 1.0) <= 1e-12);
    CHECK(std::fabs(mu) <= 1e-10);
    CHECK(std::fabs(var - 1.0) <= 1e-6);
  }
}

TEST_CASE("backward is bitwise deterministic") {
  std::mt19937_64 rng(3);
  nn::ParameterSet ps;
  nn::Mlp mlp(ps, "m", {4, 8, 2}, rng);
  Tensor x = random_const({5, 4}, rng);
  auto run = [&] {
    ps.zero_grad();
    Graph g;
    GraphScope s(g);
    g.backward(sum(softmax_rows(mlp(x))));
    std::vector<double> all;
    for (auto& t : ps.tensors()) all.insert(all.end(), t.grad().begin(), t.grad().end());
    return all;
  };
  CHECK(run() == run());
}

TEST_CASE("scaled-input weight gradient equals delta outer product and scales exactly") {
  std::mt19937_64 rng(11);
  const std::size_t L = 6, C = 5;
  Tensor feat = random_const({L, C}, rng);
  Tensor tau = random_const({1, C}, rng);
  Tensor theta = random_param({C, C}, rng);
  Tensor frozen_delta = random_const({L, C}, rng);

  auto grad_for = [&](const Tensor& t, Tensor* z_out, Tensor* o_out) {
    theta.zero_grad();
    Graph g;
    GraphScope s(g);
    Tensor o = mul(feat, t);
    Tensor z = matmul(o, theta);
    g.backward(sum(mul(z, frozen_delta)));
    if (z_out) *z_out = z;
    if (o_out) *o_out = o;
    return std::vector<double>(theta.grad().begin(), theta.grad().end());
  };

  Tensor z, o;
  const auto g1 = grad_for(tau, &z, &o);
  for (std::size_t m = 0; m < C; ++m) {
    for (std::size_t n = 0; n < C; ++n) {
      double outer = 0.0;
      for (std::size_t i = 0; i < L; ++i) outer += z.grad()[i * C + n] * o.at(i, m);
      CHECK(std::fabs(g1[m * C + n] - outer) <= 1e-10);
    }
  }
  const auto g2 = grad_for(scale(tau, 2.0), nullptr, nullptr);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == 2.0 * g1[i]);
}

TEST_CASE("finite difference check") {
  SUBCASE("exact quadratic") {
    Tensor x = Tensor::constant({2}, {1.0, -2.0});
    CHECK(finite_difference_check([](const Tensor& p) { return sum(mul(p, p)); }, x) < 1e-8);
  }
  SUBCASE("non-deterministic function is rejected") {
    Tensor x = Tensor::constant({2}, {1.0, -2.0});
    int calls = 0;
    auto f = [&](const Tensor& p) { return add_scalar(sum(mul(p, p)), 1e-3 * ++calls); };
    CHECK_THROWS_AS(finite_difference_check(f, x), UsageError);
  }
  SUBCASE("non-finite output is rejected") {
    Tensor x = Tensor::constant({1}, {-1.0});
    CHECK_THROWS(finite_difference_check([](const Tensor& p) { return sum(sqrt(p)); }, x));
  }
}

TEST_CASE("attention kernel degenerate and hand-computed cases") {
  std::mt19937_64 rng(5);
  SUBCASE("single key returns its value row for every query") {
    Tensor q = random_const({3, 4}, rng);
    Tensor k = random_const({1, 4}, rng);
    Tensor v = random_const({1, 4}, rng);
    auto r = scaled_dot_product_attention(q, k, v, 2);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < 4; ++c) CHECK(r.output.at(i, c) == v.at(0, c));
  }
  SUBCASE("identical keys average their values") {
    Tensor q = random_const({2, 4}, rng);
    Tensor k = Tensor::constant({2, 4}, {0.3, -0.1, 0.2, 0.9, 0.3, -0.1, 0.2, 0.9});
    Tensor v = random_const({2, 4}, rng);
    auto r = scaled_dot_product_attention(q, k, v, 1);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t c = 0; c < 4; ++c)
        CHECK(r.output.at(i, c) == doctest::Approx(0.5 * (v.at(0, c) + v.at(1, c))).epsilon(1e-14));
  }
  SUBCASE("two keys with scaled logit gap 1") {
    // d = 2: q.k1 = sqrt(2), q.k2 = 0 -> scaled logits 1 and 0.
    Tensor q = Tensor::constant({1, 2}, {1.0, 0.0});
    Tensor k = Tensor::constant({2, 2}, {std::sqrt(2.0), 0.0, 0.0, 0.0});
    Tensor v = Tensor::constant({2, 2}, {1.0, 0.0, 0.0, 1.0});
    auto r = scaled_dot_product_attention(q, k, v, 1);
    const double e = std::exp(1.0);
    CHECK(r.weights[0].at(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-14));
    CHECK(r.weights[0].at(0, 1) == doctest::Approx(1 / (e + 1)).epsilon(1e-14));
  }
  SUBCASE("single key through projections returns the projected value row") {
    nn::ParameterSet ps;
    nn::MultiHeadAttention mha(ps, "a", 4, 2, true, rng);
    Tensor q = random_const({3, 4}, rng);
    Tensor ctx = random_const({1, 4}, rng);
    Tensor out = mha(q, ctx);
    Tensor expected = mha.out_proj()(mha.v_proj()(ctx));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < 4; ++c) CHECK(out.at(i, c) == doctest::Approx(expected.at(0, c)).epsilon(1e-14));
  }
  SUBCASE("width must divide into heads") {
    Tensor q = Tensor::zeros({1, 6});
    CHECK_THROWS_AS(scaled_dot_product_attention(q, q, q, 4), ShapeError);
  }
}

TEST_CASE("Adam and the cosine schedule") {
  SUBCASE("first step moves by lr against the gradient sign") {
    Tensor p = Tensor::parameter({3}, {1.0, 1.0, 1.0});
    Adam opt({p});
    Graph g;
    {
      GraphScope s(g);
      g.backward(sum(mul(p, Tensor::constant({3}, {2.0, -0.5, 1e-3}))));
    }
    opt.step(0.01);
    CHECK(p.values()[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(p.values()[1] == doctest::Approx(1.01).epsilon(1e-6));
    CHECK(p.values()[2] == doctest::Approx(0.99).epsilon(1e-4));
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::parameter({2}, {0.5, -0.5});
    Adam opt({p});
    opt.step(0.1);
    CHECK(p.values()[0] == 0.5);
    CHECK(p.values()[1] == -0.5);
    CHECK(opt.state().t == 1);
  }
  SUBCASE("schedule endpoints") {
    CHECK(cosine_lr(0, 100, 1e-4) == 1e-4);
    CHECK(cosine_lr(99, 100, 1e-4) < 1e-7);
    CHECK(cosine_lr(50, 100, 1e-4) == doctest::Approx(5e-5));
  }
  SUBCASE("non-finite gradients are rejected") {
    Tensor p = Tensor::parameter({1}, {0.0});
    p.node()->grad_buffer()[0] = std::nan("");
    Adam opt({p});
    CHECK_THROWS_AS(opt.step(0.1), NumericError);
  }
}

TEST_CASE("error paths") {
  SUBCASE("shape mismatch names operation and shapes") {
    try {
      add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2}));
      FAIL("expected throw");
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("add") != std::string::npos);
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[3x2]") != std::string::npos);
    }
  }
  SUBCASE("non-scalar loss") {
    Tensor p = Tensor::parameter({2}, {1.0, 2.0});
    Graph g;
    GraphScope s(g);
    CHECK_THROWS_AS(g.backward(mul(p, p)), ShapeError);
  }
  SUBCASE("non-finite gradient names the node") {
    Tensor p = Tensor::parameter({1}, {2.0});
    Graph g;
    GraphScope s(g);
    Tensor y = sqrt(sub(p, Tensor::scalar(2.0)));
    try {
      g.backward(sum(y));
      FAIL("expected throw");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("sub") != std::string::npos);
    }
  }
  SUBCASE("non-finite forward value") {
    CHECK_THROWS_AS(log(Tensor::constant({1}, {0.0})), NumericError);
  }
}

TEST_CASE("dropout") {
  std::mt19937_64 a(1), b(1);
  Tensor x = Tensor::full({4, 8}, 1.0);
  CHECK(dropout(x, 0.0, a).values().data() == x.values().data());
  Tensor d1 = dropout(x, 0.5, a);
  Tensor d2 = dropout(x, 0.5, b);
  std::mt19937_64 c(1);
  (void)dropout(x, 0.0, c);
  Tensor d3 = dropout(x, 0.5, c);
  CHECK(std::vector<double>(d2.values().begin(), d2.values().end()) ==
        std::vector<double>(d3.values().begin(), d3.values().end()));
  (void)d1;
}
