#include "elosslab/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace elosslab::ad {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_stable(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

const Tape::Node& Tape::node(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("Tape: node id not recorded on this tape");
  return nodes_[static_cast<std::size_t>(id)];
}

Tape::Node& Tape::node(int id) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->node(id));
}

int Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&, Node&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = node(id);
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  n.grad += g;
}

Matrix Tape::grad(int id) const {
  const Node& n = node(id);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

int Tape::leaf(Matrix value) { return push(std::move(value), true, nullptr); }
int Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

int Tape::add(int a, int b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    throw std::invalid_argument("Tape::add: shape mismatch");
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(va + vb, rg, [a, b](Tape& t, Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, self.grad);
  });
}

int Tape::sub(int a, int b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    throw std::invalid_argument("Tape::sub: shape mismatch");
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(va - vb, rg, [a, b](Tape& t, Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, -self.grad);
  });
}

int Tape::mul(int a, int b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    throw std::invalid_argument("Tape::mul: shape mismatch");
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(va.cwiseProduct(vb), rg, [a, b](Tape& t, Node& self) {
    t.accumulate(a, self.grad.cwiseProduct(t.value(b)));
    t.accumulate(b, self.grad.cwiseProduct(t.value(a)));
  });
}

int Tape::matmul(int a, int b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.cols() != vb.rows()) throw std::invalid_argument("Tape::matmul: inner dim mismatch");
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(va * vb, rg, [a, b](Tape& t, Node& self) {
    t.accumulate(a, self.grad * t.value(b).transpose());
    t.accumulate(b, t.value(a).transpose() * self.grad);
  });
}

int Tape::add_rowvec(int a, int b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (vb.rows() != 1 || vb.cols() != va.cols())
    throw std::invalid_argument("Tape::add_rowvec: expected a (1, cols) row vector");
  const bool rg = requires_grad(a) || requires_grad(b);
  Matrix out = va;
  out.rowwise() += vb.row(0);
  return push(std::move(out), rg, [a, b](Tape& t, Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, self.grad.colwise().sum());
  });
}

int Tape::scale(int a, double c) {
  return push(c * value(a), requires_grad(a), [a, c](Tape& t, Node& self) {
    t.accumulate(a, c * self.grad);
  });
}

int Tape::add_scalar(int a, double c) {
  return push(value(a).array() + c, requires_grad(a), [a](Tape& t, Node& self) {
    t.accumulate(a, self.grad);
  });
}

int Tape::relu(int a) {
  return push(value(a).cwiseMax(0.0), requires_grad(a), [a](Tape& t, Node& self) {
    const Matrix mask = (t.value(a).array() > 0.0).cast<double>();
    t.accumulate(a, self.grad.cwiseProduct(mask));
  });
}

int Tape::silu(int a) {
  const Matrix& va = value(a);
  Matrix out = va.unaryExpr([](double x) { return x * sigmoid(x); });
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    const Matrix d = t.value(a).unaryExpr([](double x) {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    });
    t.accumulate(a, self.grad.cwiseProduct(d));
  });
}

int Tape::tanh(int a) {
  Matrix out = value(a).array().tanh();
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    t.accumulate(a, self.grad.cwiseProduct((1.0 - self.value.array().square()).matrix()));
  });
}

int Tape::exp(int a) {
  Matrix out = value(a).array().exp();
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    t.accumulate(a, self.grad.cwiseProduct(self.value));
  });
}

int Tape::log(int a) {
  Matrix out = value(a).array().log();
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    t.accumulate(a, self.grad.cwiseQuotient(t.value(a)));
  });
}

int Tape::square(int a) {
  Matrix out = value(a).array().square();
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    t.accumulate(a, 2.0 * self.grad.cwiseProduct(t.value(a)));
  });
}

int Tape::sqrt(int a) {
  Matrix out = value(a).array().sqrt();
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    t.accumulate(a, (self.grad.array() / (2.0 * self.value.array())).matrix());
  });
}

int Tape::softplus(int a) {
  Matrix out = value(a).unaryExpr([](double x) { return softplus_stable(x); });
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    const Matrix d = t.value(a).unaryExpr([](double x) { return sigmoid(x); });
    t.accumulate(a, self.grad.cwiseProduct(d));
  });
}

int Tape::sum(int a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    const Matrix& va = t.value(a);
    t.accumulate(a, Matrix::Constant(va.rows(), va.cols(), self.grad(0, 0)));
  });
}

int Tape::mean(int a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).mean();
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    const Matrix& va = t.value(a);
    const double c = self.grad(0, 0) / static_cast<double>(va.size());
    t.accumulate(a, Matrix::Constant(va.rows(), va.cols(), c));
  });
}

int Tape::smooth_norm(int a, double eps) {
  Matrix out(1, 1);
  out(0, 0) = std::sqrt(value(a).squaredNorm() + eps * eps);
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    t.accumulate(a, (self.grad(0, 0) / self.value(0, 0)) * t.value(a));
  });
}

int Tape::block(int a, Eigen::Index i0, Eigen::Index j0, Eigen::Index rows, Eigen::Index cols) {
  const Matrix& va = value(a);
  if (i0 < 0 || j0 < 0 || i0 + rows > va.rows() || j0 + cols > va.cols())
    throw std::invalid_argument("Tape::block: slice out of range");
  return push(va.block(i0, j0, rows, cols), requires_grad(a),
              [a, i0, j0, rows, cols](Tape& t, Node& self) {
                const Matrix& va = t.value(a);
                Matrix g = Matrix::Zero(va.rows(), va.cols());
                g.block(i0, j0, rows, cols) = self.grad;
                t.accumulate(a, g);
              });
}

int Tape::reshape(int a, Eigen::Index rows, Eigen::Index cols) {
  const Matrix& va = value(a);
  if (rows * cols != va.size()) throw std::invalid_argument("Tape::reshape: size mismatch");
  Matrix out = Eigen::Map<const Matrix>(va.data(), rows, cols);
  return push(std::move(out), requires_grad(a), [a](Tape& t, Node& self) {
    const Matrix& va = t.value(a);
    t.accumulate(a, Eigen::Map<const Matrix>(self.grad.data(), va.rows(), va.cols()));
  });
}

int Tape::gather_cols(int a, std::vector<int> cols) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] < 0 || cols[k] >= va.cols())
      throw std::invalid_argument("Tape::gather_cols: column index out of range");
    out.col(static_cast<Eigen::Index>(k)) = va.col(cols[k]);
  }
  return push(std::move(out), requires_grad(a), [a, cols = std::move(cols)](Tape& t, Node& self) {
    const Matrix& va = t.value(a);
    Matrix g = Matrix::Zero(va.rows(), va.cols());
    for (std::size_t k = 0; k < cols.size(); ++k)
      g.col(cols[k]) += self.grad.col(static_cast<Eigen::Index>(k));
    t.accumulate(a, g);
  });
}

void Tape::run_backward(int root) {
  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backprop) continue;
    n.backprop(*this, n);
  }
}

void Tape::backward(int root) {
  const Node& r = node(root);
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw std::invalid_argument("Tape::backward: root must be a 1x1 scalar");
  backward_seed(root, Matrix::Ones(1, 1));
}

void Tape::backward_seed(int root, const Matrix& seed) {
  Node& r = node(root);
  if (seed.rows() != r.value.rows() || seed.cols() != r.value.cols())
    throw std::invalid_argument("Tape::backward_seed: seed shape mismatch");
  if (r.grad.size() == 0) r.grad = Matrix::Zero(r.value.rows(), r.value.cols());
  r.grad += seed;
  run_backward(root);
}

}  // namespace elosslab::ad
