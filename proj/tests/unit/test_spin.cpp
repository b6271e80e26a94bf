#include <cmath>

#include "doctest.h"
#include "elosslab/spin.hpp"
#include "test_util.hpp"

using namespace elosslab;
using spin::LatticeHamiltonian;
using spin::SpinConfig;
using spin::SpinLogits;

namespace {

LatticeHamiltonian uniform_hamiltonian(int L, double j) {
  LatticeHamiltonian H;
  H.L = L;
  H.J_horizontal = geom::Matrix::Constant(L, L - 1, j);
  H.J_vertical = geom::Matrix::Constant(L - 1, L, j);
  return H;
}

SpinConfig random_config(int L, rng::Engine& eng) {
  SpinConfig s(L, L);
  for (int r = 0; r < L; ++r)
    for (int c = 0; c < L; ++c) s(r, c) = (eng.uniform() < 0.5) ? -1 : 1;
  return s;
}

/// Enumerates all 2^(L^2) configurations, calling fn(config, local_energy).
template <typename F>
void scan_local_energy(const LatticeHamiltonian& H, const SpinConfig& y, double h0, F&& fn) {
  const int n = H.L * H.L;
  for (std::uint64_t m = 0; m < (1ULL << n); ++m) {
    SpinConfig s(H.L, H.L);
    for (int b = 0; b < n; ++b) s(b / H.L, b % H.L) = ((m >> b) & 1ULL) ? -1 : 1;
    fn(s, spin::local_energy(s, y, H, h0));
  }
}

}  // namespace

TEST_SUITE_BEGIN("spin");

TEST_CASE("sample_hamiltonian: determinism, range, near-zero mean") {
  const LatticeHamiltonian a = spin::sample_hamiltonian(4, 55);
  const LatticeHamiltonian b = spin::sample_hamiltonian(4, 55);
  CHECK((a.J_horizontal - b.J_horizontal).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.J_vertical - b.J_vertical).cwiseAbs().maxCoeff() == 0.0);
  a.validate();

  double total = 0.0;
  long count = 0;
  for (int i = 0; i < 5000; ++i) {
    const LatticeHamiltonian H = spin::sample_hamiltonian(4, rng::derive_seed(1, i));
    CHECK(H.J_horizontal.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(H.J_vertical.cwiseAbs().maxCoeff() <= 1.0);
    total += H.J_horizontal.sum() + H.J_vertical.sum();
    count += H.J_horizontal.size() + H.J_vertical.size();
  }
  // mean of `count` U(-1,1) draws: sd = 1/sqrt(3*count)
  CHECK(std::abs(total / count) <= 3.0 / std::sqrt(3.0 * static_cast<double>(count)));
  CHECK_THROWS_AS(spin::sample_hamiltonian(1, 0), std::invalid_argument);
}

TEST_CASE("true_energy: zero couplings, 2x2 ferromagnet, flip identity, flip symmetry") {
  rng::Engine eng(66);
  const LatticeHamiltonian zeroH = uniform_hamiltonian(3, 0.0);
  CHECK(spin::true_energy(zeroH, random_config(3, eng)) == 0.0);

  const LatticeHamiltonian ferro2 = uniform_hamiltonian(2, 1.0);
  CHECK(spin::true_energy(ferro2, SpinConfig::Constant(2, 2, 1)) == doctest::Approx(-4.0));

  const LatticeHamiltonian H = spin::sample_hamiltonian(4, 2);
  for (int trial = 0; trial < 20; ++trial) {
    SpinConfig y = random_config(4, eng);
    CHECK(spin::true_energy(H, y) ==
          doctest::Approx(spin::true_energy(H, (-y).eval())).epsilon(1e-12));
    const Eigen::ArrayXXd h = spin::local_field(H, y, 0.0);
    const int r = static_cast<int>(eng.uniform_below(4));
    const int c = static_cast<int>(eng.uniform_below(4));
    SpinConfig flipped = y;
    flipped(r, c) = -flipped(r, c);
    const double delta = spin::true_energy(H, flipped) - spin::true_energy(H, y);
    CHECK(delta == doctest::Approx(2.0 * y(r, c) * h(r, c)).epsilon(1e-12));
  }
}

TEST_CASE("ground_state_exhaustive: chains and the 3x3 ferromagnet") {
  LatticeHamiltonian chain;  // 1x2 chain realized as the 2x2 lattice with one live edge
  chain.L = 2;
  chain.J_horizontal = geom::Matrix::Zero(2, 1);
  chain.J_vertical = geom::Matrix::Zero(1, 2);
  chain.J_horizontal(0, 0) = 1.0;
  spin::GroundState gs = spin::ground_state_exhaustive(chain);
  CHECK(gs.config(0, 0) == gs.config(0, 1));

  chain.J_horizontal(0, 0) = -1.0;
  gs = spin::ground_state_exhaustive(chain);
  CHECK(gs.config(0, 0) == -gs.config(0, 1));
  CHECK(gs.energy == doctest::Approx(-1.0));

  const spin::GroundState ferro = spin::ground_state_exhaustive(uniform_hamiltonian(3, 1.0));
  CHECK(ferro.energy == doctest::Approx(-12.0));
  CHECK((ferro.config == ferro.config(0, 0)).all());

  LatticeHamiltonian too_big = uniform_hamiltonian(6, 0.5);
  CHECK_THROWS_AS(spin::ground_state_exhaustive(too_big), std::invalid_argument);
}

TEST_CASE("ground states are flip-stable and enumeration matches brute force") {
  rng::Engine eng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const LatticeHamiltonian H = spin::sample_hamiltonian(3, rng::derive_seed(3, trial));
    const spin::GroundState gs = spin::ground_state_exhaustive(H);
    CHECK(gs.energy == doctest::Approx(spin::true_energy(H, gs.config)).epsilon(1e-12));

    // brute-force oracle over all 512 configurations
    double best = 1e300;
    scan_local_energy(H, gs.config, 0.0, [&](const SpinConfig& s, double) {
      best = std::min(best, spin::true_energy(H, s));
    });
    CHECK(gs.energy == doctest::Approx(best).epsilon(1e-12));

    // single-spin flips can only raise the energy
    const Eigen::ArrayXXd h = spin::local_field(H, gs.config, 0.0);
    CHECK((gs.config.cast<double>() * h >= -1e-12).all());
  }
}

TEST_CASE("local_field: zero couplings with offset, h0=0 base case") {
  rng::Engine eng(88);
  const SpinConfig y = random_config(3, eng);
  const Eigen::ArrayXXd h = spin::local_field(uniform_hamiltonian(3, 0.0), y, 5.0);
  CHECK((h - 5.0 * y.cast<double>()).abs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(spin::local_field(uniform_hamiltonian(3, 0.0), y, -1.0), std::invalid_argument);
}

TEST_CASE("local_energy: uniqueness of the data at large h0, linearity") {
  rng::Engine eng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const LatticeHamiltonian H = spin::sample_hamiltonian(2, rng::derive_seed(11, trial));
    const SpinConfig y = random_config(2, eng);

    // exhaustive scan: y is the unique minimizer at h0 = 5 on the 2x2 lattice
    const double e_data = spin::local_energy(y, y, H, 5.0);
    int strictly_above = 0, total = 0;
    scan_local_energy(H, y, 5.0, [&](const SpinConfig& s, double e) {
      ++total;
      if ((s != y).any()) {
        CHECK(e > e_data);
        ++strictly_above;
      }
    });
    CHECK(total == 16);
    CHECK(strictly_above == 15);

    CHECK(spin::local_energy((-y).eval(), y, H, 5.0) == doctest::Approx(-e_data).epsilon(1e-12));
  }
}

TEST_CASE("local_energy: ground-state data stays an argmin at h0 = 0.5") {
  rng::Engine eng(111);
  for (int trial = 0; trial < 10; ++trial) {
    const LatticeHamiltonian H = spin::sample_hamiltonian(3, rng::derive_seed(21, trial));
    const spin::GroundState gs = spin::ground_state_exhaustive(H);
    const double e_data = spin::local_energy(gs.config, gs.config, H, 0.5);
    scan_local_energy(H, gs.config, 0.5,
                      [&](const SpinConfig&, double e) { CHECK(e >= e_data - 1e-12); });
  }
}

TEST_CASE("local_energy: h0 = 0 with non-ground data admits counterexamples") {
  rng::Engine eng(131);
  int counterexamples = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const LatticeHamiltonian H = spin::sample_hamiltonian(3, rng::derive_seed(31, trial));
    SpinConfig y = random_config(3, eng);
    if ((y == spin::ground_state_exhaustive(H).config).all()) continue;
    const double e_data = spin::local_energy(y, y, H, 0.0);
    bool beaten = false;
    scan_local_energy(H, y, 0.0, [&](const SpinConfig&, double e) {
      if (e < e_data - 1e-12) beaten = true;
    });
    if (beaten) ++counterexamples;
  }
  CHECK(counterexamples >= 1);
}

TEST_CASE("local_energy_loss: uniform logits, saturation, T-scaling, gradient") {
  const int L = 3;
  rng::Engine eng(141);
  const LatticeHamiltonian H = spin::sample_hamiltonian(L, 9);
  const SpinConfig y = random_config(L, eng);
  const double T = 0.1, h0 = 4.01;

  const auto zero_rep = spin::local_energy_loss(SpinLogits::Zero(L, L), y, H, h0, T);
  CHECK(zero_rep.value == doctest::Approx(-L * L * std::log(2.0)).epsilon(1e-12));

  const SpinLogits saturated = 50.0 * y.cast<double>().matrix();
  const Eigen::ArrayXXd h = spin::local_field(H, y, h0);
  const double expected = -(h * y.cast<double>()).sum() / T;
  CHECK(spin::local_energy_loss(saturated, y, H, h0, T).value ==
        doctest::Approx(expected).epsilon(1e-6));

  // scaling T by c scales the energy part by 1/c and leaves entropy alone
  const SpinLogits z = testutil::random_cloud(L, L, eng);
  const spin::FreeEnergyParts parts = spin::local_energy_loss_parts(z, y, H, h0);
  for (const double Tc : {0.1, 0.2, 1.0}) {
    CHECK(spin::local_energy_loss(z, y, H, h0, Tc).value ==
          doctest::Approx(parts.energy_term / Tc - parts.entropy_term).epsilon(1e-12));
  }

  for (int trial = 0; trial < 100; ++trial) {
    const SpinLogits zt = testutil::random_cloud(L, L, eng);
    const auto rep = spin::local_energy_loss(zt, y, H, h0, T);
    const double err = testutil::fd_gradient_rel_error(
        [&](const geom::Matrix& zz) { return spin::local_energy_loss(zz, y, H, h0, T).value; }, zt,
        rep.grad);
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("cross_entropy_loss: ln2 at zero, saturation, gradient") {
  const int L = 3;
  rng::Engine eng(151);
  const SpinConfig y = random_config(L, eng);
  CHECK(spin::cross_entropy_loss(SpinLogits::Zero(L, L), y).value ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(spin::cross_entropy_loss((10.0 * y.cast<double>()).matrix(), y).value <= 1e-8);

  for (int trial = 0; trial < 100; ++trial) {
    const SpinLogits z = testutil::random_cloud(L, L, eng);
    const auto rep = spin::cross_entropy_loss(z, y);
    CHECK(testutil::fd_gradient_rel_error(
              [&](const geom::Matrix& zz) { return spin::cross_entropy_loss(zz, y).value; }, z,
              rep.grad) <= 1e-5);
  }
}

TEST_CASE("margin_loss: exact values and gradient away from the hinge") {
  const int L = 3;
  rng::Engine eng(161);
  const SpinConfig y = random_config(L, eng);
  CHECK(spin::margin_loss((2.0 * y.cast<double>()).matrix(), y).value == doctest::Approx(0.0));
  CHECK(spin::margin_loss(SpinLogits::Zero(L, L), y).value == doctest::Approx(1.0));

  int checked = 0;
  for (int trial = 0; trial < 300 && checked < 100; ++trial) {
    const SpinLogits z = 2.0 * testutil::random_cloud(L, L, eng);
    bool near_hinge = false;
    for (int r = 0; r < L; ++r)
      for (int c = 0; c < L; ++c)
        if (std::abs(1.0 - y(r, c) * z(r, c)) < 1e-3) near_hinge = true;
    if (near_hinge) continue;
    const auto rep = spin::margin_loss(z, y);
    CHECK(testutil::fd_gradient_rel_error(
              [&](const geom::Matrix& zz) { return spin::margin_loss(zz, y).value; }, z,
              rep.grad) <= 1e-5);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("true_energy_loss: entropy at zero, ferromagnetic saturation, gradient") {
  const int L = 3;
  rng::Engine eng(171);
  const LatticeHamiltonian H = spin::sample_hamiltonian(L, 19);
  const double T = 0.1;
  CHECK(spin::true_energy_loss(SpinLogits::Zero(L, L), H, T).value ==
        doctest::Approx(-L * L * std::log(2.0)).epsilon(1e-12));

  const LatticeHamiltonian ferro = uniform_hamiltonian(L, 1.0);
  const SpinLogits ones = SpinLogits::Constant(L, L, 50.0);
  const double n_edges = 2.0 * L * (L - 1);
  CHECK(spin::true_energy_loss(ones, ferro, T).value ==
        doctest::Approx(-n_edges / T).epsilon(1e-6));

  for (int trial = 0; trial < 100; ++trial) {
    const SpinLogits z = testutil::random_cloud(L, L, eng);
    const auto rep = spin::true_energy_loss(z, H, T);
    CHECK(testutil::fd_gradient_rel_error(
              [&](const geom::Matrix& zz) { return spin::true_energy_loss(zz, H, T).value; }, z,
              rep.grad) <= 1e-5);
  }
}

TEST_CASE("predict_config: sign rule, tie to +1, scale invariance, saturated argmin") {
  rng::Engine eng(181);
  const SpinConfig y = random_config(3, eng);
  CHECK((spin::predict_config(y.cast<double>().matrix()) == y).all());
  CHECK((spin::predict_config(SpinLogits::Zero(3, 3)) == 1).all());

  const SpinLogits z = testutil::random_cloud(3, 3, eng);
  CHECK((spin::predict_config(z) == spin::predict_config((3.7 * z).eval())).all());

  // the T->0 minimizer direction of the free-energy loss is sign(h) = y for h0 > 4
  const LatticeHamiltonian H = spin::sample_hamiltonian(3, 23);
  const Eigen::ArrayXXd h = spin::local_field(H, y, 4.01);
  const SpinLogits zstar = 50.0 * h.sign().matrix();
  CHECK((spin::predict_config(zstar) == y).all());
}

TEST_SUITE_END();
