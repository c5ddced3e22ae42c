#include "transgauss/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace transgauss::ad {

void Tape::reset() {
  nodes_.clear();
  vals_.clear();
  grads_.clear();
  concat_parents_.clear();
}

void Tape::check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: invalid node handle");
}

void Tape::check_len(Var a, Var b) const {
  check(a);
  check(b);
  if (nodes_[a.id].len != nodes_[b.id].len)
    throw std::invalid_argument("tape: operand length mismatch (" +
                                std::to_string(nodes_[a.id].len) + " vs " +
                                std::to_string(nodes_[b.id].len) + ")");
}

Var Tape::alloc(Op op, int len, int a, int b, int c) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.c = c;
  n.off = static_cast<int>(vals_.size());
  n.len = len;
  vals_.resize(vals_.size() + len);
  nodes_.push_back(n);
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(std::span<const double> value) {
  Var v = alloc(Op::Leaf, static_cast<int>(value.size()));
  std::copy(value.begin(), value.end(), vptr(v.id));
  return v;
}

Var Tape::zeros(int len) {
  Var v = alloc(Op::Leaf, len);
  std::fill_n(vptr(v.id), len, 0.0);
  return v;
}

Var Tape::add(Var a, Var b) {
  check_len(a, b);
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::Add, len, a.id, b.id);
  double* y = vptr(out.id);
  const double* pa = vptr(a.id);
  const double* pb = vptr(b.id);
  for (int i = 0; i < len; ++i) y[i] = pa[i] + pb[i];
  return out;
}

Var Tape::sub(Var a, Var b) {
  check_len(a, b);
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::Sub, len, a.id, b.id);
  double* y = vptr(out.id);
  const double* pa = vptr(a.id);
  const double* pb = vptr(b.id);
  for (int i = 0; i < len; ++i) y[i] = pa[i] - pb[i];
  return out;
}

Var Tape::mul(Var a, Var b) {
  check_len(a, b);
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::Mul, len, a.id, b.id);
  double* y = vptr(out.id);
  const double* pa = vptr(a.id);
  const double* pb = vptr(b.id);
  for (int i = 0; i < len; ++i) y[i] = pa[i] * pb[i];
  return out;
}

#define TG_UNARY(NAME, OP, EXPR)                    \
  Var Tape::NAME(Var a) {                           \
    check(a);                                       \
    const int len = nodes_[a.id].len;               \
    Var out = alloc(Op::OP, len, a.id);             \
    double* y = vptr(out.id);                       \
    const double* x = vptr(a.id);                   \
    for (int i = 0; i < len; ++i) y[i] = (EXPR);    \
    return out;                                     \
  }

TG_UNARY(square, Square, x[i] * x[i])
TG_UNARY(reciprocal, Reciprocal, 1.0 / x[i])
TG_UNARY(log, Log, std::log(x[i]))
TG_UNARY(exp, Exp, std::exp(x[i]))
TG_UNARY(tanh, Tanh, std::tanh(x[i]))
TG_UNARY(sigmoid, Sigmoid, 1.0 / (1.0 + std::exp(-x[i])))
TG_UNARY(relu, Relu, x[i] >= 0.0 ? x[i] : 0.0)
TG_UNARY(elu, Elu, x[i] >= 0.0 ? x[i] : std::exp(x[i]) - 1.0)
#undef TG_UNARY

Var Tape::scale(Var a, double c) {
  check(a);
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::Scale, len, a.id);
  nodes_[out.id].k = c;
  double* y = vptr(out.id);
  const double* x = vptr(a.id);
  for (int i = 0; i < len; ++i) y[i] = c * x[i];
  return out;
}

Var Tape::add_const(Var a, double c) {
  check(a);
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::AddConst, len, a.id);
  nodes_[out.id].k = c;
  double* y = vptr(out.id);
  const double* x = vptr(a.id);
  for (int i = 0; i < len; ++i) y[i] = x[i] + c;
  return out;
}

Var Tape::scale_by(Var a, Var s) {
  check(a);
  check(s);
  if (nodes_[s.id].len != 1) throw std::invalid_argument("scale_by: scalar operand required");
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::ScaleBy, len, a.id, s.id);
  const double sv = *vptr(s.id);
  double* y = vptr(out.id);
  const double* x = vptr(a.id);
  for (int i = 0; i < len; ++i) y[i] = sv * x[i];
  return out;
}

Var Tape::dot(Var a, Var b) {
  check_len(a, b);
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::Dot, 1, a.id, b.id);
  const double* pa = vptr(a.id);
  const double* pb = vptr(b.id);
  double acc = 0.0;
  for (int i = 0; i < len; ++i) acc += pa[i] * pb[i];
  *vptr(out.id) = acc;
  return out;
}

Var Tape::sum(Var a) {
  check(a);
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::Sum, 1, a.id);
  const double* x = vptr(a.id);
  double acc = 0.0;
  for (int i = 0; i < len; ++i) acc += x[i];
  *vptr(out.id) = acc;
  return out;
}

Var Tape::affine(Var w, Var x, Var b, int rows, int cols) {
  check(w);
  check(x);
  if (nodes_[w.id].len != rows * cols)
    throw std::invalid_argument("affine: weight length != rows*cols");
  if (nodes_[x.id].len != cols) throw std::invalid_argument("affine: input length != cols");
  if (b.valid()) {
    check(b);
    if (nodes_[b.id].len != rows) throw std::invalid_argument("affine: bias length != rows");
  }
  Var out = alloc(Op::Affine, rows, w.id, x.id, b.valid() ? b.id : -1);
  nodes_[out.id].i0 = rows;
  nodes_[out.id].i1 = cols;
  double* y = vptr(out.id);
  const double* pw = vptr(w.id);
  const double* px = vptr(x.id);
  const double* pb = b.valid() ? vptr(b.id) : nullptr;
  for (int i = 0; i < rows; ++i) {
    double acc = pb ? pb[i] : 0.0;
    const double* row = pw + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) acc += row[j] * px[j];
    y[i] = acc;
  }
  return out;
}

Var Tape::softmax(Var a) {
  check(a);
  const int len = nodes_[a.id].len;
  Var out = alloc(Op::Softmax, len, a.id);
  double* y = vptr(out.id);
  const double* x = vptr(a.id);
  double mx = x[0];
  for (int i = 1; i < len; ++i) mx = std::max(mx, x[i]);
  double z = 0.0;
  for (int i = 0; i < len; ++i) {
    y[i] = std::exp(x[i] - mx);
    z += y[i];
  }
  for (int i = 0; i < len; ++i) y[i] /= z;
  return out;
}

Var Tape::gather_row(Var m, int cols, int row) {
  check(m);
  if (cols <= 0 || nodes_[m.id].len % cols != 0)
    throw std::invalid_argument("gather_row: node length not divisible by cols");
  const int rows = nodes_[m.id].len / cols;
  if (row < 0 || row >= rows) throw std::out_of_range("gather_row: row out of range");
  Var out = alloc(Op::GatherRow, cols, m.id);
  nodes_[out.id].i0 = cols;
  nodes_[out.id].i1 = row;
  const double* src = vptr(m.id) + static_cast<std::size_t>(row) * cols;
  std::copy_n(src, cols, vptr(out.id));
  return out;
}

Var Tape::index(Var a, int i) {
  check(a);
  if (i < 0 || i >= nodes_[a.id].len) throw std::out_of_range("index: out of range");
  Var out = alloc(Op::Index, 1, a.id);
  nodes_[out.id].i0 = i;
  *vptr(out.id) = vptr(a.id)[i];
  return out;
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  int len = 0;
  for (Var p : parts) {
    check(p);
    len += nodes_[p.id].len;
  }
  const int parents_off = static_cast<int>(concat_parents_.size());
  for (Var p : parts) concat_parents_.push_back(p.id);
  Var out = alloc(Op::Concat, len);
  nodes_[out.id].i0 = parents_off;
  nodes_[out.id].i1 = static_cast<int>(parts.size());
  double* y = vptr(out.id);
  for (Var p : parts) {
    const int plen = nodes_[p.id].len;
    std::copy_n(vptr(p.id), plen, y);
    y += plen;
  }
  return out;
}

int Tape::size(Var v) const {
  check(v);
  return nodes_[v.id].len;
}

std::span<const double> Tape::value(Var v) const {
  check(v);
  return {vptr(v.id), static_cast<std::size_t>(nodes_[v.id].len)};
}

double Tape::scalar(Var v) const {
  check(v);
  if (nodes_[v.id].len != 1) throw std::invalid_argument("scalar: node is not scalar");
  return *vptr(v.id);
}

std::span<const double> Tape::grad(Var v) const {
  check(v);
  if (grads_.size() != vals_.size())
    throw std::logic_error("grad: backward() has not run on this tape");
  return {gptr(v.id), static_cast<std::size_t>(nodes_[v.id].len)};
}

void Tape::backward(Var loss) {
  check(loss);
  if (nodes_[loss.id].len != 1) throw std::invalid_argument("backward: loss must be scalar");
  grads_.assign(vals_.size(), 0.0);
  *gptr(loss.id) = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[id];
    const double* g = gptr(id);
    const double* y = vptr(id);
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add: {
        double* ga = gptr(n.a);
        double* gb = gptr(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::Sub: {
        double* ga = gptr(n.a);
        double* gb = gptr(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::Mul: {
        double* ga = gptr(n.a);
        double* gb = gptr(n.b);
        const double* xa = vptr(n.a);
        const double* xb = vptr(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i] * xb[i];
          gb[i] += g[i] * xa[i];
        }
        break;
      }
      case Op::Square: {
        double* ga = gptr(n.a);
        const double* xa = vptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += 2.0 * xa[i] * g[i];
        break;
      }
      case Op::Reciprocal: {
        double* ga = gptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] -= y[i] * y[i] * g[i];
        break;
      }
      case Op::Log: {
        double* ga = gptr(n.a);
        const double* xa = vptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] / xa[i];
        break;
      }
      case Op::Exp: {
        double* ga = gptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += y[i] * g[i];
        break;
      }
      case Op::Tanh: {
        double* ga = gptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += (1.0 - y[i] * y[i]) * g[i];
        break;
      }
      case Op::Sigmoid: {
        double* ga = gptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += y[i] * (1.0 - y[i]) * g[i];
        break;
      }
      case Op::Relu: {
        double* ga = gptr(n.a);
        const double* xa = vptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += (xa[i] >= 0.0 ? 1.0 : 0.0) * g[i];
        break;
      }
      case Op::Elu: {
        double* ga = gptr(n.a);
        const double* xa = vptr(n.a);
        // for x < 0, d elu/dx = exp(x) = y + 1
        for (int i = 0; i < n.len; ++i) ga[i] += (xa[i] >= 0.0 ? 1.0 : y[i] + 1.0) * g[i];
        break;
      }
      case Op::Scale: {
        double* ga = gptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += n.k * g[i];
        break;
      }
      case Op::AddConst: {
        double* ga = gptr(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += g[i];
        break;
      }
      case Op::ScaleBy: {
        double* ga = gptr(n.a);
        double* gs = gptr(n.b);
        const double* xa = vptr(n.a);
        const double sv = *vptr(n.b);
        double acc = 0.0;
        for (int i = 0; i < n.len; ++i) {
          ga[i] += sv * g[i];
          acc += xa[i] * g[i];
        }
        *gs += acc;
        break;
      }
      case Op::Dot: {
        double* ga = gptr(n.a);
        double* gb = gptr(n.b);
        const double* xa = vptr(n.a);
        const double* xb = vptr(n.b);
        const double gs = g[0];
        const int len = nodes_[n.a].len;
        for (int i = 0; i < len; ++i) {
          ga[i] += gs * xb[i];
          gb[i] += gs * xa[i];
        }
        break;
      }
      case Op::Sum: {
        double* ga = gptr(n.a);
        const double gs = g[0];
        const int len = nodes_[n.a].len;
        for (int i = 0; i < len; ++i) ga[i] += gs;
        break;
      }
      case Op::Affine: {
        const int rows = n.i0, cols = n.i1;
        double* gw = gptr(n.a);
        double* gx = gptr(n.b);
        const double* pw = vptr(n.a);
        const double* px = vptr(n.b);
        for (int i = 0; i < rows; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          double* gwrow = gw + static_cast<std::size_t>(i) * cols;
          const double* wrow = pw + static_cast<std::size_t>(i) * cols;
          for (int j = 0; j < cols; ++j) {
            gwrow[j] += gi * px[j];
            gx[j] += gi * wrow[j];
          }
        }
        if (n.c >= 0) {
          double* gb = gptr(n.c);
          for (int i = 0; i < rows; ++i) gb[i] += g[i];
        }
        break;
      }
      case Op::Softmax: {
        double* ga = gptr(n.a);
        double inner = 0.0;
        for (int i = 0; i < n.len; ++i) inner += g[i] * y[i];
        for (int i = 0; i < n.len; ++i) ga[i] += y[i] * (g[i] - inner);
        break;
      }
      case Op::GatherRow: {
        double* gm = gptr(n.a) + static_cast<std::size_t>(n.i1) * n.i0;
        for (int i = 0; i < n.len; ++i) gm[i] += g[i];
        break;
      }
      case Op::Index: {
        gptr(n.a)[n.i0] += g[0];
        break;
      }
      case Op::Concat: {
        const double* gy = g;
        for (int p = 0; p < n.i1; ++p) {
          const int pid = concat_parents_[n.i0 + p];
          const int plen = nodes_[pid].len;
          double* gp = gptr(pid);
          for (int i = 0; i < plen; ++i) gp[i] += gy[i];
          gy += plen;
        }
        break;
      }
    }
  }
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> analytic_grad, std::span<double> params,
                           double step, double tol) {
  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + step;
    const double fp = f(params);
    params[i] = orig - step;
    const double fm = f(params);
    params[i] = orig;
    const double numeric = (fp - fm) / (2.0 * step);
    const double analytic = analytic_grad[i];
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-4});
    const double rel = std::fabs(analytic - numeric) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_coord = i;
      report.analytic_at_worst = analytic;
      report.numeric_at_worst = numeric;
    }
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace transgauss::ad
