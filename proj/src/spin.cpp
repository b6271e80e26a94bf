#include "elosslab/spin.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "elosslab/rng.hpp"

namespace elosslab::spin {

namespace {

constexpr int kMaxEnumSites = 26;

void check_spin_shape(const LatticeHamiltonian& H, const Eigen::ArrayXXi& s, const char* where) {
  if (s.rows() != H.L || s.cols() != H.L)
    throw std::invalid_argument(std::string(where) + ": spin shape mismatch");
}

double binary_entropy_from_logit(double z) {
  // S_b = ln(2 cosh z) - z tanh z, written with a stable softplus.
  const double sp2z = std::max(2.0 * z, 0.0) + std::log1p(std::exp(-std::abs(2.0 * z)));
  return sp2z - z - z * std::tanh(z);
}

Eigen::RowVectorXd flatten_row_major(const Matrix& m) {
  Eigen::RowVectorXd out(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(k++) = m(r, c);
  return out;
}

Matrix unflatten_row_major(const Eigen::RowVectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = v(k++);
  return out;
}

loss::LossReport report_from_graph(const SpinLogits& z, SpinLossKind kind,
                                   const SpinLossInputs& in, double T) {
  ad::Tape tape;
  const ad::Var zv = ad::wrap(tape, tape.leaf(flatten_row_major(z)));
  const ad::Var l = spin_loss_graph(tape, zv, kind, in, T);
  tape.backward(l.id);
  loss::LossReport rep;
  rep.value = l.value()(0, 0);
  rep.grad = unflatten_row_major(zv.grad().row(0), z.rows(), z.cols());
  return rep;
}

}  // namespace

void LatticeHamiltonian::validate() const {
  if (L < 2) throw std::invalid_argument("LatticeHamiltonian: L must be >= 2");
  if (J_horizontal.rows() != L || J_horizontal.cols() != L - 1 || J_vertical.rows() != L - 1 ||
      J_vertical.cols() != L)
    throw std::invalid_argument("LatticeHamiltonian: coupling shape mismatch");
  if (J_horizontal.cwiseAbs().maxCoeff() > 1.0 || J_vertical.cwiseAbs().maxCoeff() > 1.0)
    throw std::invalid_argument("LatticeHamiltonian: couplings must lie in [-1, 1]");
}

void lattice_edges(int L, std::vector<int>& from, std::vector<int>& to) {
  from.clear();
  to.clear();
  for (int r = 0; r < L; ++r)
    for (int c = 0; c + 1 < L; ++c) {
      from.push_back(site_index(r, c, L));
      to.push_back(site_index(r, c + 1, L));
    }
  for (int r = 0; r + 1 < L; ++r)
    for (int c = 0; c < L; ++c) {
      from.push_back(site_index(r, c, L));
      to.push_back(site_index(r + 1, c, L));
    }
}

Eigen::RowVectorXd flatten_couplings(const LatticeHamiltonian& H) {
  Eigen::RowVectorXd j(H.n_edges());
  Eigen::Index k = 0;
  for (int r = 0; r < H.L; ++r)
    for (int c = 0; c + 1 < H.L; ++c) j(k++) = H.J_horizontal(r, c);
  for (int r = 0; r + 1 < H.L; ++r)
    for (int c = 0; c < H.L; ++c) j(k++) = H.J_vertical(r, c);
  return j;
}

LatticeHamiltonian sample_hamiltonian(int L, std::uint64_t seed) {
  if (L < 2) throw std::invalid_argument("sample_hamiltonian: L must be >= 2");
  rng::Engine eng(seed);
  LatticeHamiltonian H;
  H.L = L;
  H.J_horizontal = Matrix(L, L - 1);
  H.J_vertical = Matrix(L - 1, L);
  for (int r = 0; r < L; ++r)
    for (int c = 0; c + 1 < L; ++c) H.J_horizontal(r, c) = eng.uniform(-1.0, 1.0);
  for (int r = 0; r + 1 < L; ++r)
    for (int c = 0; c < L; ++c) H.J_vertical(r, c) = eng.uniform(-1.0, 1.0);
  return H;
}

double true_energy(const LatticeHamiltonian& H, const SpinConfig& s) {
  H.validate();
  check_spin_shape(H, s, "true_energy");
  double e = 0.0;
  for (int r = 0; r < H.L; ++r)
    for (int c = 0; c + 1 < H.L; ++c) e -= H.J_horizontal(r, c) * s(r, c) * s(r, c + 1);
  for (int r = 0; r + 1 < H.L; ++r)
    for (int c = 0; c < H.L; ++c) e -= H.J_vertical(r, c) * s(r, c) * s(r + 1, c);
  return e;
}

GroundState ground_state_exhaustive(const LatticeHamiltonian& H) {
  H.validate();
  const int n = H.L * H.L;
  if (n > kMaxEnumSites) throw std::invalid_argument("ground_state_exhaustive: lattice too large");

  // Adjacency with couplings, sites flattened row-major.
  std::vector<std::vector<std::pair<int, double>>> nbrs(static_cast<std::size_t>(n));
  std::vector<int> from, to;
  lattice_edges(H.L, from, to);
  const Eigen::RowVectorXd j = flatten_couplings(H);
  for (std::size_t e = 0; e < from.size(); ++e) {
    nbrs[static_cast<std::size_t>(from[e])].emplace_back(to[e], j(static_cast<Eigen::Index>(e)));
    nbrs[static_cast<std::size_t>(to[e])].emplace_back(from[e], j(static_cast<Eigen::Index>(e)));
  }

  // Site 0 fixed to +1; bit b of the pattern drives site b+1 (set bit = -1).
  std::vector<int> s(static_cast<std::size_t>(n), 1);
  double energy = 0.0;
  for (std::size_t e = 0; e < from.size(); ++e) energy -= j(static_cast<Eigen::Index>(e));

  const int nbits = n - 1;
  const std::uint64_t total = 1ULL << nbits;
  double best_energy = energy;
  std::uint64_t best_pattern = 0;
  for (std::uint64_t m = 1; m < total; ++m) {
    const int site = std::countr_zero(m) + 1;  // Gray code flips bit ctz(m)
    double h = 0.0;
    for (const auto& [nb, w] : nbrs[static_cast<std::size_t>(site)]) h += w * s[static_cast<std::size_t>(nb)];
    energy += 2.0 * s[static_cast<std::size_t>(site)] * h;
    s[static_cast<std::size_t>(site)] = -s[static_cast<std::size_t>(site)];
    const std::uint64_t pattern = m ^ (m >> 1);
    if (energy < best_energy || (energy == best_energy && pattern < best_pattern)) {
      best_energy = energy;
      best_pattern = pattern;
    }
  }

  GroundState gs;
  gs.config = SpinConfig::Constant(H.L, H.L, 1);
  for (int b = 0; b < nbits; ++b)
    if ((best_pattern >> b) & 1ULL) gs.config((b + 1) / H.L, (b + 1) % H.L) = -1;
  gs.energy = true_energy(H, gs.config);  // recompute to shed enumeration drift
  return gs;
}

Eigen::ArrayXXd local_field(const LatticeHamiltonian& H, const SpinConfig& y, double h0) {
  H.validate();
  check_spin_shape(H, y, "local_field");
  if (h0 < 0.0) throw std::invalid_argument("local_field: h0 must be >= 0");
  Eigen::ArrayXXd h = h0 * y.cast<double>();
  for (int r = 0; r < H.L; ++r)
    for (int c = 0; c + 1 < H.L; ++c) {
      h(r, c) += H.J_horizontal(r, c) * y(r, c + 1);
      h(r, c + 1) += H.J_horizontal(r, c) * y(r, c);
    }
  for (int r = 0; r + 1 < H.L; ++r)
    for (int c = 0; c < H.L; ++c) {
      h(r, c) += H.J_vertical(r, c) * y(r + 1, c);
      h(r + 1, c) += H.J_vertical(r, c) * y(r, c);
    }
  return h;
}

double local_energy(const SpinConfig& y_hat, const SpinConfig& y, const LatticeHamiltonian& H,
                    double h0) {
  check_spin_shape(H, y_hat, "local_energy");
  return -(local_field(H, y, h0) * y_hat.cast<double>()).sum();
}

SpinLossInputs SpinLossInputs::for_sample(const LatticeHamiltonian& H, const SpinConfig& y,
                                          double h0, SpinLossKind kind) {
  SpinLossInputs in;
  in.L = H.L;
  lattice_edges(H.L, in.edge_from, in.edge_to);
  if (kind == SpinLossKind::true_energy) {
    in.couplings = flatten_couplings(H);
  } else {
    in.targets = flatten_row_major(y.cast<double>().matrix());
    if (kind == SpinLossKind::local_energy)
      in.fields = flatten_row_major(local_field(H, y, h0).matrix());
  }
  return in;
}

ad::Var spin_loss_graph(ad::Tape& tape, ad::Var z, SpinLossKind kind, const SpinLossInputs& in,
                        double T) {
  const Eigen::Index batch = z.value().rows();
  const Eigen::Index sites = z.value().cols();
  if (sites != static_cast<Eigen::Index>(in.L) * in.L)
    throw std::invalid_argument("spin_loss_graph: logits site count mismatch");
  const double inv_b = 1.0 / static_cast<double>(batch);

  switch (kind) {
    case SpinLossKind::cross_entropy: {
      const int y = tape.constant(in.targets);
      const int arg = tape.scale(tape.mul(z.id, y), -2.0);
      const int sp = tape.softplus(arg);
      return ad::wrap(tape, tape.mean(sp));
    }
    case SpinLossKind::margin: {
      const int y = tape.constant(in.targets);
      const int hinge = tape.relu(tape.add_scalar(tape.scale(tape.mul(z.id, y), -1.0), 1.0));
      return ad::wrap(tape, tape.mean(hinge));
    }
    case SpinLossKind::local_energy: {
      if (!(T > 0.0)) throw std::invalid_argument("spin_loss_graph: T must be > 0");
      const int h = tape.constant(in.fields);
      const int m = tape.tanh(z.id);
      const int energy = tape.sum(tape.mul(h, m));
      // S_b(z) = softplus(2z) - z - z tanh z, summed over sites
      const int sb = tape.sub(tape.sub(tape.softplus(tape.scale(z.id, 2.0)), z.id),
                              tape.mul(z.id, m));
      const int entropy = tape.sum(sb);
      return ad::wrap(tape, tape.add(tape.scale(energy, -inv_b / T), tape.scale(entropy, -inv_b)));
    }
    case SpinLossKind::true_energy: {
      if (!(T > 0.0)) throw std::invalid_argument("spin_loss_graph: T must be > 0");
      const int m = tape.tanh(z.id);
      const int ma = tape.gather_cols(m, in.edge_from);
      const int mb = tape.gather_cols(m, in.edge_to);
      const int j = tape.constant(in.couplings);
      const int energy = tape.sum(tape.mul(j, tape.mul(ma, mb)));
      const int sb = tape.sub(tape.sub(tape.softplus(tape.scale(z.id, 2.0)), z.id),
                              tape.mul(z.id, m));
      const int entropy = tape.sum(sb);
      return ad::wrap(tape, tape.add(tape.scale(energy, -inv_b / T), tape.scale(entropy, -inv_b)));
    }
  }
  throw std::logic_error("spin_loss_graph: unknown loss kind");
}

loss::LossReport local_energy_loss(const SpinLogits& z, const SpinConfig& y,
                                   const LatticeHamiltonian& H, double h0, double T) {
  check_spin_shape(H, y, "local_energy_loss");
  if (z.rows() != H.L || z.cols() != H.L)
    throw std::invalid_argument("local_energy_loss: logit shape mismatch");
  return report_from_graph(z, SpinLossKind::local_energy,
                           SpinLossInputs::for_sample(H, y, h0, SpinLossKind::local_energy), T);
}

loss::LossReport cross_entropy_loss(const SpinLogits& z, const SpinConfig& y) {
  if (z.rows() != y.rows() || z.cols() != y.cols())
    throw std::invalid_argument("cross_entropy_loss: shape mismatch");
  if (z.cols() != z.rows()) throw std::invalid_argument("cross_entropy_loss: expected square grid");
  SpinLossInputs in;
  in.L = static_cast<int>(z.rows());
  in.targets = Eigen::RowVectorXd(z.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    for (Eigen::Index c = 0; c < y.cols(); ++c) in.targets(0, k++) = y(r, c);
  return report_from_graph(z, SpinLossKind::cross_entropy, in, 1.0);
}

loss::LossReport margin_loss(const SpinLogits& z, const SpinConfig& y) {
  if (z.rows() != y.rows() || z.cols() != y.cols())
    throw std::invalid_argument("margin_loss: shape mismatch");
  if (z.cols() != z.rows()) throw std::invalid_argument("margin_loss: expected square grid");
  SpinLossInputs in;
  in.L = static_cast<int>(z.rows());
  in.targets = Eigen::RowVectorXd(z.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    for (Eigen::Index c = 0; c < y.cols(); ++c) in.targets(0, k++) = y(r, c);
  return report_from_graph(z, SpinLossKind::margin, in, 1.0);
}

loss::LossReport true_energy_loss(const SpinLogits& z, const LatticeHamiltonian& H, double T) {
  if (z.rows() != H.L || z.cols() != H.L)
    throw std::invalid_argument("true_energy_loss: logit shape mismatch");
  return report_from_graph(z, SpinLossKind::true_energy,
                           SpinLossInputs::for_sample(H, SpinConfig(), 0.0, SpinLossKind::true_energy),
                           T);
}

FreeEnergyParts local_energy_loss_parts(const SpinLogits& z, const SpinConfig& y,
                                        const LatticeHamiltonian& H, double h0) {
  const Eigen::ArrayXXd h = local_field(H, y, h0);
  const Eigen::ArrayXXd m = z.array().tanh();
  FreeEnergyParts parts;
  parts.energy_term = -(h * m).sum();
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      parts.entropy_term += binary_entropy_from_logit(z(r, c));
  return parts;
}

FreeEnergyParts true_energy_loss_parts(const SpinLogits& z, const LatticeHamiltonian& H) {
  H.validate();
  const Eigen::ArrayXXd m = z.array().tanh();
  FreeEnergyParts parts;
  for (int r = 0; r < H.L; ++r)
    for (int c = 0; c + 1 < H.L; ++c)
      parts.energy_term -= H.J_horizontal(r, c) * m(r, c) * m(r, c + 1);
  for (int r = 0; r + 1 < H.L; ++r)
    for (int c = 0; c < H.L; ++c) parts.energy_term -= H.J_vertical(r, c) * m(r, c) * m(r + 1, c);
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      parts.entropy_term += binary_entropy_from_logit(z(r, c));
  return parts;
}

SpinConfig predict_config(const SpinLogits& z) {
  SpinConfig s(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) s(r, c) = (z(r, c) < 0.0) ? -1 : 1;
  return s;
}

}  // namespace elosslab::spin
