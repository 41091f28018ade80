#include "choir/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "choir/ad/kernels.hpp"
#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

Tensor make_result(const char* op, Shape shape, std::vector<real> value, std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward) {
  for (real v : value) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite value in output of shape " + shape_str(shape));
    }
  }
  auto node = std::make_shared<Node>();
  node->id = next_node_id();
  node->op = op;
  node->shape = std::move(shape);
  node->value = std::move(value);
  Graph* graph = active_graph();
  bool needs = false;
  if (graph) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward);
    graph->record(node);
  }
  return Tensor(std::move(node));
}

bool wants(const NodePtr& p) { return p->requires_grad; }

struct Broadcast {
  std::size_t rows, cols, ar, ac, br, bc;
  Shape shape;

  std::size_t ia(std::size_t r, std::size_t c) const { return (ar == 1 ? 0 : r) * ac + (ac == 1 ? 0 : c); }
  std::size_t ib(std::size_t r, std::size_t c) const { return (br == 1 ? 0 : r) * bc + (bc == 1 ? 0 : c); }
};

Broadcast broadcast(const char* op, const Tensor& a, const Tensor& b) {
  Broadcast bc{};
  bc.ar = a.rows();
  bc.ac = a.cols();
  bc.br = b.rows();
  bc.bc = b.cols();
  if (a.size() == 1) bc.ar = bc.ac = 1;
  if (b.size() == 1) bc.br = bc.bc = 1;
  auto fit = [](std::size_t x, std::size_t y, std::size_t& out) {
    if (x == y || y == 1) {
      out = x;
      return true;
    }
    if (x == 1) {
      out = y;
      return true;
    }
    return false;
  };
  if (!fit(bc.ar, bc.br, bc.rows) || !fit(bc.ac, bc.bc, bc.cols)) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  const std::size_t n = bc.rows * bc.cols;
  if (a.size() == n) {
    bc.shape = a.shape();
  } else if (b.size() == n) {
    bc.shape = b.shape();
  } else {
    bc.shape = {bc.rows, bc.cols};
  }
  return bc;
}

enum class BinOp { Add, Sub, Mul, Div };

Tensor binary(const char* op, BinOp kind, const Tensor& a, const Tensor& b) {
  Broadcast bc = broadcast(op, a, b);
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<real> out(bc.rows * bc.cols);
  const bool same = a.size() == out.size() && b.size() == out.size();
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      switch (kind) {
        case BinOp::Add: out[i] = av[i] + bv[i]; break;
        case BinOp::Sub: out[i] = av[i] - bv[i]; break;
        case BinOp::Mul: out[i] = av[i] * bv[i]; break;
        case BinOp::Div: out[i] = av[i] / bv[i]; break;
      }
    }
  } else {
    for (std::size_t r = 0; r < bc.rows; ++r) {
      for (std::size_t c = 0; c < bc.cols; ++c) {
        const real x = av[bc.ia(r, c)], y = bv[bc.ib(r, c)];
        real& o = out[r * bc.cols + c];
        switch (kind) {
          case BinOp::Add: o = x + y; break;
          case BinOp::Sub: o = x - y; break;
          case BinOp::Mul: o = x * y; break;
          case BinOp::Div: o = x / y; break;
        }
      }
    }
  }
  auto backward = [bc, kind, same](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    const auto& g = self.grad;
    if (wants(pa)) {
      auto& ga = pa->grad_buffer();
      for (std::size_t r = 0; r < bc.rows; ++r) {
        for (std::size_t c = 0; c < bc.cols; ++c) {
          const std::size_t o = r * bc.cols + c;
          const std::size_t ia = same ? o : bc.ia(r, c);
          real d = g[o];
          if (kind == BinOp::Mul) d *= pb->value[same ? o : bc.ib(r, c)];
          if (kind == BinOp::Div) d /= pb->value[same ? o : bc.ib(r, c)];
          ga[ia] += d;
        }
      }
    }
    if (wants(pb)) {
      auto& gb = pb->grad_buffer();
      for (std::size_t r = 0; r < bc.rows; ++r) {
        for (std::size_t c = 0; c < bc.cols; ++c) {
          const std::size_t o = r * bc.cols + c;
          const std::size_t ib = same ? o : bc.ib(r, c);
          real d = g[o];
          if (kind == BinOp::Sub) d = -d;
          if (kind == BinOp::Mul) d *= pa->value[same ? o : bc.ia(r, c)];
          if (kind == BinOp::Div) {
            const real y = pb->value[ib];
            d *= -pa->value[same ? o : bc.ia(r, c)] / (y * y);
          }
          gb[ib] += d;
        }
      }
    }
  };
  return make_result(op, bc.shape, std::move(out), {a.node(), b.node()}, backward);
}

// Elementwise unary op: forward f(x), derivative df(x, y).
template <class F, class DF>
Tensor unary(const char* op, const Tensor& a, F f, DF df) {
  const auto& av = a.node()->value;
  std::vector<real> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  auto backward = [df](Node& self) {
    auto& p = self.parents[0];
    auto& gp = p->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gp[i] += self.grad[i] * df(p->value[i], self.value[i]);
  };
  return make_result(op, a.shape(), std::move(out), {a.node()}, backward);
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() == 0) throw ShapeError(std::string(op) + ": rank-0 tensor");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary("add", BinOp::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary("sub", BinOp::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary("mul", BinOp::Mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return binary("div", BinOp::Div, a, b); }

Tensor scale(const Tensor& a, real s) {
  return unary("scale", a, [s](real x) { return x * s; }, [s](real, real) { return s; });
}

Tensor add_scalar(const Tensor& a, real s) {
  return unary("add_scalar", a, [s](real x) { return x + s; }, [](real, real) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t R = a.rows(), K = a.cols(), C = b.cols();
  std::vector<real> out(R * C, 0.0);
  kernels::gemm_nn(a.node()->value.data(), b.node()->value.data(), out.data(), R, K, C);
  auto backward = [R, K, C](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) kernels::gemm_nt(self.grad.data(), pb->value.data(), pa->grad_buffer().data(), R, C, K);
    if (wants(pb)) kernels::gemm_tn(pa->value.data(), self.grad.data(), pb->grad_buffer().data(), R, K, C);
  };
  return make_result("matmul", {R, C}, std::move(out), {a.node(), b.node()}, backward);
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t R = a.rows(), K = a.cols(), C = b.rows();
  std::vector<real> out(R * C, 0.0);
  kernels::gemm_nt(a.node()->value.data(), b.node()->value.data(), out.data(), R, K, C);
  auto backward = [R, K, C](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    // out = A B^T: dA = dOut B, dB = dOut^T A
    if (wants(pa)) kernels::gemm_nn(self.grad.data(), pb->value.data(), pa->grad_buffer().data(), R, C, K);
    if (wants(pb)) kernels::gemm_tn(self.grad.data(), pa->value.data(), pb->grad_buffer().data(), R, C, K);
  };
  return make_result("matmul_nt", {R, C}, std::move(out), {a.node(), b.node()}, backward);
}

Tensor transpose(const Tensor& a) {
  require_matrix("transpose", a);
  const std::size_t R = a.rows(), C = a.cols();
  const auto& av = a.node()->value;
  std::vector<real> out(R * C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out[c * R + r] = av[r * C + c];
  auto backward = [R, C](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) gp[r * C + c] += self.grad[c * R + r];
  };
  return make_result("transpose", {C, R}, std::move(out), {a.node()}, backward);
}

Tensor softmax_rows(const Tensor& a) {
  require_matrix("softmax_rows", a);
  const std::size_t R = a.rows(), C = a.cols();
  const auto& av = a.node()->value;
  std::vector<real> out(R * C);
  for (std::size_t r = 0; r < R; ++r) {
    const real* x = av.data() + r * C;
    real* y = out.data() + r * C;
    real mx = -std::numeric_limits<real>::infinity();
    for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, x[c]);
    real z = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    for (std::size_t c = 0; c < C; ++c) y[c] /= z;
  }
  auto backward = [R, C](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < R; ++r) {
      const real* y = self.value.data() + r * C;
      const real* g = self.grad.data() + r * C;
      real dot = 0.0;
      for (std::size_t c = 0; c < C; ++c) dot += g[c] * y[c];
      for (std::size_t c = 0; c < C; ++c) gp[r * C + c] += y[c] * (g[c] - dot);
    }
  };
  return make_result("softmax_rows", a.shape(), std::move(out), {a.node()}, backward);
}

Tensor log_softmax_rows(const Tensor& a) {
  require_matrix("log_softmax_rows", a);
  const std::size_t R = a.rows(), C = a.cols();
  const auto& av = a.node()->value;
  std::vector<real> out(R * C);
  for (std::size_t r = 0; r < R; ++r) {
    const real* x = av.data() + r * C;
    real mx = -std::numeric_limits<real>::infinity();
    for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, x[c]);
    real z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(x[c] - mx);
    const real lse = mx + std::log(z);
    for (std::size_t c = 0; c < C; ++c) out[r * C + c] = x[c] - lse;
  }
  auto backward = [R, C](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < R; ++r) {
      const real* y = self.value.data() + r * C;
      const real* g = self.grad.data() + r * C;
      real gs = 0.0;
      for (std::size_t c = 0; c < C; ++c) gs += g[c];
      for (std::size_t c = 0; c < C; ++c) gp[r * C + c] += g[c] - std::exp(y[c]) * gs;
    }
  };
  return make_result("log_softmax_rows", a.shape(), std::move(out), {a.node()}, backward);
}

Tensor layer_norm_rows(const Tensor& a, real eps) {
  require_matrix("layer_norm_rows", a);
  const std::size_t R = a.rows(), C = a.cols();
  const auto& av = a.node()->value;
  std::vector<real> out(R * C);
  std::vector<real> inv_std(R);
  for (std::size_t r = 0; r < R; ++r) {
    const real* x = av.data() + r * C;
    real mu = 0.0;
    for (std::size_t c = 0; c < C; ++c) mu += x[c];
    mu /= static_cast<real>(C);
    real var = 0.0;
    for (std::size_t c = 0; c < C; ++c) var += (x[c] - mu) * (x[c] - mu);
    var /= static_cast<real>(C);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < C; ++c) out[r * C + c] = (x[c] - mu) * inv_std[r];
  }
  auto backward = [R, C, inv_std = std::move(inv_std)](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    const real n = static_cast<real>(C);
    for (std::size_t r = 0; r < R; ++r) {
      const real* y = self.value.data() + r * C;
      const real* g = self.grad.data() + r * C;
      real gm = 0.0, gy = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        gm += g[c];
        gy += g[c] * y[c];
      }
      gm /= n;
      gy /= n;
      for (std::size_t c = 0; c < C; ++c) gp[r * C + c] += inv_std[r] * (g[c] - gm - y[c] * gy);
    }
  };
  return make_result("layer_norm_rows", a.shape(), std::move(out), {a.node()}, backward);
}

Tensor gelu(const Tensor& a) {
  constexpr real inv_sqrt2 = 0.70710678118654752440;
  const real inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      "gelu", a, [](real x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [inv_sqrt_2pi](real x, real) {
        return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](real x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const real e = std::exp(x);
        return e / (1.0 + e);
      },
      [](real, real y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& a) {
  return unary("log", a, [](real x) { return std::log(x); }, [](real x, real) { return 1.0 / x; });
}

Tensor exp(const Tensor& a) {
  return unary("exp", a, [](real x) { return std::exp(x); }, [](real, real y) { return y; });
}

Tensor sqrt(const Tensor& a) {
  return unary("sqrt", a, [](real x) { return std::sqrt(x); }, [](real, real y) { return 0.5 / y; });
}

Tensor abs(const Tensor& a) {
  return unary(
      "abs", a, [](real x) { return std::fabs(x); },
      [](real x, real) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor clamp(const Tensor& a, real lo, real hi) {
  return unary(
      "clamp", a, [lo, hi](real x) { return std::clamp(x, lo, hi); },
      [lo, hi](real x, real) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor concat(std::span<const Tensor> parts, Axis axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::vector<NodePtr> parents;
  std::vector<std::size_t> extents;
  for (const auto& p : parts) {
    require_matrix("concat", p);
    parents.push_back(p.node());
  }
  if (axis == Axis::Rows) {
    const std::size_t C = parts[0].cols();
    std::size_t R = 0;
    for (const auto& p : parts) {
      if (p.cols() != C) {
        throw ShapeError("concat(rows): incompatible shapes " + shape_str(parts[0].shape()) + " and " +
                         shape_str(p.shape()));
      }
      extents.push_back(p.rows());
      R += p.rows();
    }
    std::vector<real> out;
    out.reserve(R * C);
    for (const auto& p : parts) out.insert(out.end(), p.node()->value.begin(), p.node()->value.end());
    auto backward = [C, extents](Node& self) {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        const std::size_t n = extents[i] * C;
        if (wants(self.parents[i])) {
          auto& gp = self.parents[i]->grad_buffer();
          for (std::size_t j = 0; j < n; ++j) gp[j] += self.grad[offset + j];
        }
        offset += n;
      }
    };
    return make_result("concat_rows", {R, C}, std::move(out), std::move(parents), backward);
  }
  const std::size_t R = parts[0].rows();
  std::size_t C = 0;
  for (const auto& p : parts) {
    if (p.rows() != R) {
      throw ShapeError("concat(cols): incompatible shapes " + shape_str(parts[0].shape()) + " and " +
                       shape_str(p.shape()));
    }
    extents.push_back(p.cols());
    C += p.cols();
  }
  std::vector<real> out(R * C);
  std::size_t c0 = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    const auto& pv = p.node()->value;
    for (std::size_t r = 0; r < R; ++r) std::copy_n(pv.data() + r * pc, pc, out.data() + r * C + c0);
    c0 += pc;
  }
  auto backward = [R, C, extents](Node& self) {
    std::size_t c0 = 0;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      const std::size_t pc = extents[i];
      if (wants(self.parents[i])) {
        auto& gp = self.parents[i]->grad_buffer();
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t c = 0; c < pc; ++c) gp[r * pc + c] += self.grad[r * C + c0 + c];
      }
      c0 += pc;
    }
  };
  return make_result("concat_cols", {R, C}, std::move(out), std::move(parents), backward);
}

Tensor concat(std::initializer_list<Tensor> parts, Axis axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& a, Axis axis, std::size_t start, std::size_t count) {
  require_matrix("slice", a);
  const std::size_t R = a.rows(), C = a.cols();
  const auto& av = a.node()->value;
  if (axis == Axis::Rows) {
    if (start + count > R) {
      throw ShapeError("slice(rows): range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                       ") out of bounds for shape " + shape_str(a.shape()));
    }
    std::vector<real> out(av.begin() + static_cast<std::ptrdiff_t>(start * C),
                            av.begin() + static_cast<std::ptrdiff_t>((start + count) * C));
    auto backward = [start, C](Node& self) {
      auto& gp = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gp[start * C + i] += self.grad[i];
    };
    return make_result("slice_rows", {count, C}, std::move(out), {a.node()}, backward);
  }
  if (start + count > C) {
    throw ShapeError("slice(cols): range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of bounds for shape " + shape_str(a.shape()));
  }
  std::vector<real> out(R * count);
  for (std::size_t r = 0; r < R; ++r) std::copy_n(av.data() + r * C + start, count, out.data() + r * count);
  auto backward = [R, C, start, count](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < count; ++c) gp[r * C + start + c] += self.grad[r * count + c];
  };
  return make_result("slice_cols", {R, count}, std::move(out), {a.node()}, backward);
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  require_matrix("gather_rows", a);
  const std::size_t R = a.rows(), C = a.cols();
  const auto& av = a.node()->value;
  std::vector<real> out(index.size() * C);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= R) {
      throw ShapeError("gather_rows: index " + std::to_string(index[i]) + " out of range for shape " +
                       shape_str(a.shape()));
    }
    std::copy_n(av.data() + index[i] * C, C, out.data() + i * C);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  auto backward = [C, idx = std::move(idx)](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < C; ++c) gp[idx[i] * C + c] += self.grad[i * C + c];
  };
  return make_result("gather_rows", {index.size(), C}, std::move(out), {a.node()}, backward);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot reshape " + shape_str(a.shape()) + " to " + shape_str(shape));
  }
  auto backward = [](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gp[i] += self.grad[i];
  };
  return make_result("reshape", std::move(shape), a.node()->value, {a.node()}, backward);
}

Tensor sum(const Tensor& a) {
  real s = 0.0;
  for (real v : a.node()->value) s += v;
  auto backward = [](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    const real g = self.grad[0];
    for (real& x : gp) x += g;
  };
  return make_result("sum", {1}, {s}, {a.node()}, backward);
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<real>(a.size()));
}

Tensor sum(const Tensor& a, Axis axis) {
  require_matrix("sum", a);
  const std::size_t R = a.rows(), C = a.cols();
  const auto& av = a.node()->value;
  if (axis == Axis::Rows) {
    std::vector<real> out(C, 0.0);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) out[c] += av[r * C + c];
    auto backward = [R, C](Node& self) {
      auto& gp = self.parents[0]->grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) gp[r * C + c] += self.grad[c];
    };
    return make_result("sum_rows", {1, C}, std::move(out), {a.node()}, backward);
  }
  std::vector<real> out(R, 0.0);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out[r] += av[r * C + c];
  auto backward = [R, C](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) gp[r * C + c] += self.grad[r];
  };
  return make_result("sum_cols", {R, 1}, std::move(out), {a.node()}, backward);
}

Tensor mean(const Tensor& a, Axis axis) {
  const real n = static_cast<real>(axis == Axis::Rows ? a.rows() : a.cols());
  return scale(sum(a, axis), 1.0 / n);
}

Tensor max_pool_groups(const Tensor& a, std::size_t group) {
  require_matrix("max_pool_groups", a);
  const std::size_t R = a.rows(), C = a.cols();
  if (group == 0 || R % group != 0) {
    throw ShapeError("max_pool_groups: " + std::to_string(R) + " rows not divisible into groups of " +
                     std::to_string(group));
  }
  const std::size_t G = R / group;
  const auto& av = a.node()->value;
  std::vector<real> out(G * C);
  std::vector<std::size_t> arg(G * C);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t best = g * group;
      for (std::size_t r = g * group + 1; r < (g + 1) * group; ++r)
        if (av[r * C + c] > av[best * C + c]) best = r;
      out[g * C + c] = av[best * C + c];
      arg[g * C + c] = best * C + c;
    }
  }
  auto backward = [arg = std::move(arg)](Node& self) {
    auto& gp = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < arg.size(); ++i) gp[arg[i]] += self.grad[i];
  };
  return make_result("max_pool_groups", {G, C}, std::move(out), {a.node()}, backward);
}

Tensor max_rows(const Tensor& a) {
  require_matrix("max_rows", a);
  return max_pool_groups(reshape(a, {a.rows(), a.cols()}), a.rows());
}

Tensor dropout(const Tensor& a, real rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return a;
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<real> mask(a.size());
  const real s = 1.0 / (1.0 - rate);
  for (real& m : mask) m = keep(rng) ? s : 0.0;
  return mul(a, Tensor::constant(a.shape(), std::move(mask)));
}

}  // namespace choir::inline CHOIR_PRECISION_NS::ad
