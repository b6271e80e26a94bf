#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace elosslab::ad {

using Matrix = Eigen::MatrixXd;

/// Reverse-mode tape over matrix-valued nodes. A tape records one forward
/// pass; backward() runs the chain rule once and the tape is then discarded
/// (no higher-order derivatives). All values are double precision.
class Tape {
 public:
  /// Records a node that gradients flow into (parameter or differentiable input).
  int leaf(Matrix value);
  /// Records a node treated as a constant.
  int constant(Matrix value);

  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);  // elementwise
  int matmul(int a, int b);
  int add_rowvec(int a, int b);  // a: (m,n), b: (1,n) broadcast over rows
  int scale(int a, double c);
  int add_scalar(int a, double c);
  int neg(int a) { return scale(a, -1.0); }

  int relu(int a);
  int silu(int a);
  int tanh(int a);
  int exp(int a);
  int log(int a);
  int square(int a);
  int sqrt(int a);
  int softplus(int a);

  int sum(int a);   // 1x1
  int mean(int a);  // 1x1
  /// Frobenius norm smoothed at zero: sqrt(sum(a^2) + eps^2), 1x1.
  int smooth_norm(int a, double eps);

  int block(int a, Eigen::Index i0, Eigen::Index j0, Eigen::Index rows, Eigen::Index cols);
  int reshape(int a, Eigen::Index rows, Eigen::Index cols);  // column-major relayout
  int gather_cols(int a, std::vector<int> cols);

  /// Backpropagates from a scalar (1x1) root with seed gradient 1.
  void backward(int root);
  /// Backpropagates from any node with an externally supplied seed gradient
  /// (used when a loss gradient is computed analytically outside the tape).
  void backward_seed(int node, const Matrix& seed);

  const Matrix& value(int id) const { return node(id).value; }
  /// Gradient accumulated by the last backward pass (zero if none reached it).
  Matrix grad(int id) const;
  bool requires_grad(int id) const { return node(id).requires_grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // allocated on demand during backward
    bool requires_grad = false;
    std::function<void(Tape&, Node&)> backprop;  // adds into parents' grads
  };

  const Node& node(int id) const;
  Node& node(int id);
  int push(Matrix value, bool requires_grad, std::function<void(Tape&, Node&)> backprop);
  void accumulate(int id, const Matrix& g);
  void run_backward(int root);

  std::vector<Node> nodes_;
};

/// Thin handle for fluent graph building on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const { return tape->value(id); }
  Matrix grad() const { return tape->grad(id); }
};

inline Var wrap(Tape& t, int id) { return Var{&t, id}; }
inline Var operator+(Var a, Var b) { return wrap(*a.tape, a.tape->add(a.id, b.id)); }
inline Var operator-(Var a, Var b) { return wrap(*a.tape, a.tape->sub(a.id, b.id)); }
inline Var operator*(Var a, Var b) { return wrap(*a.tape, a.tape->mul(a.id, b.id)); }
inline Var operator*(double c, Var a) { return wrap(*a.tape, a.tape->scale(a.id, c)); }

}  // namespace elosslab::ad
