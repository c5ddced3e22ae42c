#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace transgauss::ad {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Eager-forward, taped-backward differentiation over scalar/vector nodes.
///
/// Values and gradients live in two flat arenas owned by the tape; reset()
/// rewinds the arenas without releasing capacity so a tape can be rebuilt
/// per batch cheaply. backward() walks nodes in exact reverse creation
/// order, which fixes a canonical accumulation order and makes gradients
/// bit-reproducible for identical tapes.
class Tape {
 public:
  void reset();

  Var leaf(std::span<const double> value);
  Var leaf(std::initializer_list<double> value) {
    return leaf(std::span<const double>(value.begin(), value.size()));
  }
  Var zeros(int len);

  // elementwise; operands must match in length
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var square(Var a);
  Var reciprocal(Var a);
  Var log(Var a);
  Var exp(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);  // derivative at 0 is 1 (right derivative)
  Var elu(Var a);

  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var scale_by(Var a, Var s);  // s must be scalar

  Var dot(Var a, Var b);  // -> scalar
  Var sum(Var a);         // -> scalar

  /// y = W x (+ b). W is row-major rows x cols; pass b.id < 0 for no bias.
  Var affine(Var w, Var x, Var b, int rows, int cols);
  Var matvec(Var w, Var x, int rows, int cols) { return affine(w, x, Var{-1}, rows, cols); }

  /// Softmax over the whole vector (used over the T sequence positions).
  Var softmax(Var a);

  /// Row `row` of a node viewed as a matrix with `cols` columns.
  Var gather_row(Var m, int cols, int row);

  /// Single element as a scalar node.
  Var index(Var a, int i);

  /// Concatenation of parts in order.
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }

  int size(Var v) const;
  std::span<const double> value(Var v) const;
  double scalar(Var v) const;
  /// Valid after backward().
  std::span<const double> grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node.
  /// loss must be scalar.
  void backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    Leaf, Add, Sub, Mul, Square, Reciprocal, Log, Exp, Tanh, Sigmoid, Relu, Elu,
    Scale, AddConst, ScaleBy, Dot, Sum, Affine, Softmax, GatherRow, Index, Concat
  };

  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;  // parent ids
    int off = 0, len = 0;        // arena slice
    double k = 0.0;              // constant for Scale/AddConst
    int i0 = 0, i1 = 0;          // affine rows/cols, gather cols/row, index, concat range
  };

  Var alloc(Op op, int len, int a = -1, int b = -1, int c = -1);
  double* vptr(int id) { return vals_.data() + nodes_[id].off; }
  const double* vptr(int id) const { return vals_.data() + nodes_[id].off; }
  double* gptr(int id) { return grads_.data() + nodes_[id].off; }
  const double* gptr(int id) const { return grads_.data() + nodes_[id].off; }
  void check(Var v) const;
  void check_len(Var a, Var b) const;

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> grads_;
  std::vector<int> concat_parents_;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_coord = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool pass = false;
};

/// Central-difference check of an analytic gradient. f must be deterministic
/// in params (freeze any sampled negatives before calling). The relative
/// error denominator is floored at 1e-4 so coordinates with near-zero true
/// gradient are judged on an absolute scale.
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> analytic_grad, std::span<double> params,
                           double step, double tol);

}  // namespace transgauss::ad
