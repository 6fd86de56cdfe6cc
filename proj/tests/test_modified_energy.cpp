#include "nf4nls/modified_energy.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nf4nls;

namespace {

Eigen::VectorXcd random_coeffs(std::mt19937_64 &rng, int N, double decay = 0.0) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd c(2 * N + 1);
  for (int n = -N; n <= N; ++n) {
    c[n + N] = Complex(g(rng), g(rng)) * std::pow(japanese_bracket(n), -decay);
  }
  return c;
}

SpectralField random_v(std::mt19937_64 &rng, int N, double target_mass = 0.0) {
  Eigen::VectorXcd c = random_coeffs(rng, N, 0.6);
  if (target_mass > 0) {
    c *= std::sqrt(target_mass) / c.norm();
  }
  return SpectralField(Frame::InteractionV, N, c);
}

Complex pw(const SpectralField &v, int n, int eps) {
  return eps > 0 ? v[n] : std::conj(v[n]);
}

double phi_of(int n1, int n2, int n3, int n) {
  return to_double(phase_phi(PhaseTuple(n1, n2, n3, n)));
}

double weight(int n, double s) { return std::pow(japanese_bracket(n), 2.0 * s); }

// Visits every (n1, n2, n3, n) in Gamma_N with its phase.
template <class F> void for_gamma(int N, F &&f) {
  for (int n = -N; n <= N; ++n) {
    for (int n1 = -N; n1 <= N; ++n1) {
      for (int n3 = -N; n3 <= N; ++n3) {
        const int n2 = n1 + n3 - n;
        if (n1 == n || n3 == n || n2 < -N || n2 > N) {
          continue;
        }
        f(n1, n2, n3, n, phi_of(n1, n2, n3, n));
      }
    }
  }
}

double literal_N0_2(const SpectralField &v, double t, double s) {
  const int N = v.truncation();
  double total = 0;
  for_gamma(N, [&](int n1, int n2, int n3, int n, double phi) {
    total += (weight(n, s) / phi * std::polar(1.0, -phi * t) * v[n1] * std::conj(v[n2]) *
              v[n3] * std::conj(v[n]))
                 .real();
  });
  return total;
}

double literal_R_2(const SpectralField &v, double t, double s) {
  const int N = v.truncation();
  double total = 0;
  for_gamma(N, [&](int n1, int n2, int n3, int n, double phi) {
    const double res = std::norm(v[n1]) - std::norm(v[n2]) + std::norm(v[n3]) - std::norm(v[n]);
    const Complex mono = v[n1] * std::conj(v[n2]) * v[n3] * std::conj(v[n]);
    total += (Complex(0, -1) * res * weight(n, s) / phi * std::polar(1.0, -phi * t) * mono).real();
  });
  return total;
}

// Second generation by hand: expand one factor of the first correction by the
// nonresonant field and keep either |Phi'| <= 216 (near) or the complement
// divided by -Phi' (next boundary).
struct SecondGeneration {
  double near = 0;
  double boundary = 0;
};

SecondGeneration literal_generation_2(const SpectralField &v, double t, double s) {
  const int N = v.truncation();
  SecondGeneration out;
  for_gamma(N, [&](int n1, int n2, int n3, int n, double phi) {
    const double c = weight(n, s) / phi;
    const int freq[4] = {n1, n2, n3, n};
    const int par[4] = {1, -1, 1, -1};
    for (int b = 0; b < 4; ++b) {
      Complex others = 1.0;
      for (int q = 0; q < 4; ++q) {
        if (q != b) {
          others *= pw(v, freq[q], par[q]);
        }
      }
      const int m = freq[b], e = par[b];
      for (int m1 = -N; m1 <= N; ++m1) {
        for (int m3 = -N; m3 <= N; ++m3) {
          const int m2 = m1 + m3 - m;
          if (m1 == m || m3 == m || m2 < -N || m2 > N) {
            continue;
          }
          const double big = phi + e * phi_of(m1, m2, m3, m);
          const Complex mono = others * pw(v, m1, e) * pw(v, m2, -e) * pw(v, m3, e);
          const Complex osc = std::polar(1.0, -big * t) * mono;
          if (std::abs(big) <= 216) {
            out.near += (Complex(0, e) * c * osc).real();
          } else {
            out.boundary += (-e * c / big * osc).real();
          }
        }
      }
    }
  });
  return out;
}

// v_n -> e^{i n^4 t} v_n
SpectralField free_flow(const SpectralField &v, double t) {
  Eigen::VectorXcd c = v.coeffs();
  const int N = v.truncation();
  for (int n = -N; n <= N; ++n) {
    const double n4 = double(n) * n * n * n;
    c[n + N] *= std::polar(1.0, n4 * t);
  }
  return SpectralField(Frame::InteractionV, N, c);
}

Trajectory run(const SpectralField &v0, int N, double dt, double T) {
  IntegratorConfig ic;
  ic.truncation = N;
  ic.dt = dt;
  ic.t_final = T;
  ic.scheme = Scheme::IfRk4;
  return integrate(v0, ic);
}

} // namespace

TEST_CASE("first correction matches the literal quartic sum") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> time(-2.0, 2.0);
  for (int i = 0; i < 60; ++i) {
    const int N = 1 + i % 4;
    const SpectralField v(Frame::InteractionV, N, random_coeffs(rng, N));
    const double t = time(rng);
    const double s = (i % 3 == 0) ? 0.3 : 0.6;
    const double lit = literal_N0_2(v, t, s);
    CHECK(eval_N0(v, t, 2, N, s) == doctest::Approx(lit).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("resonant insertion matches the literal sum") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 20; ++i) {
    const int N = 1 + i % 3;
    const SpectralField v(Frame::InteractionV, N, random_coeffs(rng, N));
    const double t = 0.1 * i;
    CHECK(eval_R(v, t, 2, N, 0.6) ==
          doctest::Approx(literal_R_2(v, t, 0.6)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("second generation matches a hand expansion") {
  std::mt19937_64 rng(23);
  for (int N : {2, 3, 4}) {
    for (double t : {0.0, 0.37}) {
      const SpectralField v(Frame::InteractionV, N, random_coeffs(rng, N));
      const SecondGeneration lit = literal_generation_2(v, t, 0.6);
      CHECK(eval_N1(v, t, 2, N, 0.6) == doctest::Approx(lit.near).epsilon(1e-11).scale(1.0));
      CHECK(eval_N0(v, t, 3, N, 0.6) ==
            doctest::Approx(lit.boundary).epsilon(1e-11).scale(1.0));
    }
  }
}

TEST_CASE("zero and single-mode fields carry no correction") {
  const SpectralField zero = SpectralField::zeros(Frame::InteractionV, 3);
  const SpectralField one = zero.with_mode(2, Complex(0.6, -0.8));
  for (int j : {2, 3}) {
    CHECK(eval_N0(zero, 0.4, j, 3, 0.6) == 0.0);
    CHECK(eval_N1(zero, 0.4, j, 3, 0.6) == 0.0);
    CHECK(eval_R(zero, 0.4, j, 3, 0.6) == 0.0);
    CHECK(eval_N0(one, 0.4, j, 3, 0.6) == 0.0);
    CHECK(eval_N1(one, 0.4, j, 3, 0.6) == 0.0);
    CHECK(eval_R(one, 0.4, j, 3, 0.6) == 0.0);
    CHECK(eval_N2(one, 0.4, j, 3, 0.6) == 0.0);
  }
  const EnergyBreakdown b = modified_energy(one, 0.0, 0.6, 2, 3);
  const double expected = 0.5 * std::pow(5.0, 0.6);
  CHECK(b.hs_energy == doctest::Approx(expected).epsilon(1e-14));
  CHECK(b.modified_energy == doctest::Approx(expected).epsilon(1e-14));
  CHECK(b.derivative == 0.0);
}

TEST_CASE("corrections depend on time only through the free flow") {
  std::mt19937_64 rng(24);
  for (int N : {2, 3}) {
    const SpectralField w(Frame::InteractionV, N, random_coeffs(rng, N));
    for (double t : {0.25, -1.3}) {
      const SpectralField v = free_flow(w, t);
      for (int j : {2, 3}) {
        const double a = eval_N0(v, t, j, N, 0.6);
        CHECK(a == doctest::Approx(eval_N0(w, 0.0, j, N, 0.6)).epsilon(1e-11).scale(1.0));
        CHECK(eval_N1(v, t, j, N, 0.6) ==
              doctest::Approx(eval_N1(w, 0.0, j, N, 0.6)).epsilon(1e-11).scale(1.0));
      }
    }
  }
}

TEST_CASE("evaluate assembles the generations consistently") {
  std::mt19937_64 rng(25);
  const SpectralField v = random_v(rng, 3, 1.0);
  const NormalForm form(3, 0.6, 2);
  const EnergyBreakdown b = evaluate(form, v, 0.2);
  REQUIRE(b.terms.size() == 2);
  double hs = 0, sumN0 = 0, rate = 0;
  for (int n = -3; n <= 3; ++n) {
    hs += 0.5 * weight(n, 0.6) * std::norm(v[n]);
  }
  for (const auto &g : b.terms) {
    CHECK(g.N0 == doctest::Approx(eval_N0(v, 0.2, g.j, 3, 0.6)).epsilon(1e-13));
    CHECK(g.N1 == doctest::Approx(eval_N1(v, 0.2, g.j, 3, 0.6)).epsilon(1e-13));
    CHECK(g.R == doctest::Approx(eval_R(v, 0.2, g.j, 3, 0.6)).epsilon(1e-13));
    // |N0^(j)| <= C0 mass^j
    CHECK(std::abs(g.N0) <= g.C0 * std::pow(mass(v), g.j) + 1e-14);
    sumN0 += g.N0;
    rate += g.N1 + g.R;
  }
  CHECK(b.hs_energy == doctest::Approx(hs).epsilon(1e-14));
  CHECK(b.modified_energy == doctest::Approx(hs - sumN0).epsilon(1e-14));
  CHECK(b.derivative == doctest::Approx(rate + b.remainder).epsilon(1e-14));
  CHECK(b.remainder == doctest::Approx(eval_N2(v, 0.2, 3, 3, 0.6)).epsilon(1e-13));
  // later boundaries have smaller constants
  CHECK(form.boundary(3).l1_norm() < form.boundary(2).l1_norm());
  CHECK(form.boundary(2).degree() == 4);
  CHECK(form.boundary(3).degree() == 6);
  CHECK(form.near(3).degree() == 8);
  CHECK_THROWS_AS(form.boundary(4), std::invalid_argument);
  CHECK_THROWS_AS(eval_N0(v, 0.0, 1, 3, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(form, SpectralField::zeros(Frame::PhysicalU, 3), 0.0),
                  std::invalid_argument);
}

TEST_CASE("finite difference weights") {
  for (int order : {2, 4, 6}) {
    const auto w = central_difference_weights(order);
    const int half = int(w.size()) / 2;
    // exact on x^p for p <= order, derivative at 0 is 1 for p = 1 only
    for (int p = 0; p <= order; ++p) {
      double d = 0;
      for (int q = -half; q <= half; ++q) {
        d += w[q + half] * std::pow(double(q), p);
      }
      CHECK(d == doctest::Approx(p == 1 ? 1.0 : 0.0).scale(1.0).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(central_difference_weights(3), std::invalid_argument);
}

TEST_CASE("telescoping residual") {
  SUBCASE("vanishes on zero and single-mode data") {
    const SpectralField zero = SpectralField::zeros(Frame::InteractionV, 3);
    for (const auto &r : telescoping_residual(run(zero, 3, 1e-3, 0.02), 0.6, 1, 3)) {
      CHECK(r.residual == 0.0);
    }
    const SpectralField one = zero.with_mode(1, 0.8);
    for (const auto &r : telescoping_residual(run(one, 3, 1e-3, 0.02), 0.6, 2, 3, 6)) {
      CHECK(std::abs(r.residual) < 1e-10);
    }
  }
  SUBCASE("shrinks with the expansion depth and matches the remainder") {
    std::mt19937_64 rng(26);
    const SpectralField v0 = random_v(rng, 4, 1.0);
    const Trajectory traj = run(v0, 4, 1e-4, 0.01);
    double prev = INFINITY;
    for (int J = 1; J <= 3; ++J) {
      double worst = 0, gap = 0;
      for (const auto &r : telescoping_residual(traj, 0.6, J, 4, 6)) {
        worst = std::max(worst, std::abs(r.residual));
        gap = std::max(gap, std::abs(r.residual - r.remainder));
      }
      CHECK(worst < prev);
      CHECK(gap < 1e-4);
      prev = worst;
    }
  }
  SUBCASE("rejects short or uneven trajectories") {
    const SpectralField zero = SpectralField::zeros(Frame::InteractionV, 2);
    CHECK_THROWS_AS(telescoping_residual(run(zero, 2, 0.01, 0.02), 0.6, 1, 2),
                    std::invalid_argument);
  }
}

TEST_CASE("modified energy drifts less than the plain norm") {
  std::mt19937_64 rng(27);
  const SpectralField one = SpectralField::zeros(Frame::InteractionV, 3).with_mode(-1, 0.9);
  const DriftReport flat = energy_drift_bound(run(one, 3, 1e-4, 0.002), 0.6, 1, 3, 6);
  CHECK(flat.modified < 1e-9);
  CHECK(flat.unmodified < 1e-9);
  for (int trial = 0; trial < 3; ++trial) {
    const SpectralField v0 = random_v(rng, 4, 1.0);
    const DriftReport d = energy_drift_bound(run(v0, 4, 1e-4, 0.005), 0.6, 1, 4, 6);
    CHECK(d.modified < d.unmodified);
    CHECK(d.assembled == doctest::Approx(d.modified).epsilon(1e-3));
  }
}

TEST_CASE("density weight") {
  std::mt19937_64 rng(28);
  const SpectralField v = random_v(rng, 3, 1.0);
  CHECK(density_weight(v, 0.0, 0.5, 0.6, 1, 3) == 0.0);
  const SpectralField one = SpectralField::zeros(Frame::InteractionV, 3).with_mode(2, 0.7);
  CHECK(density_weight(one, 0.0, 2.0, 0.6, 1, 3) == 1.0);
  const double w = density_weight(v, 0.1, 2.0, 0.6, 1, 3);
  // J_max = 1 keeps generation 2 only
  CHECK(w == doctest::Approx(std::exp(eval_N0(v, 0.1, 2, 3, 0.6))).epsilon(1e-13));
  const double w2 = density_weight(v, 0.1, 2.0, 0.6, 2, 3);
  const double sum = eval_N0(v, 0.1, 2, 3, 0.6) + eval_N0(v, 0.1, 3, 3, 0.6);
  CHECK(w2 == doctest::Approx(std::exp(sum)).epsilon(1e-13));
  const NormalForm form(3, 0.6, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const SpectralField u = random_v(rng, 3, 0.5 + 0.3 * trial);
    const double r = 2.0;
    const double dw = density_weight(u, 0.3 * trial, r, 0.6, 1, 3);
    CHECK(dw <= density_weight_bound(form, r));
    CHECK(dw >= 1.0 / density_weight_bound(form, r));
  }
}

TEST_CASE("divisor counts") {
  CHECK(divisor_count(1) == 1);
  CHECK(divisor_count(12) == 6);
  CHECK(divisor_count(97) == 2);
  CHECK(divisor_count(720720) == 240);
  CHECK_THROWS_AS(divisor_count(0), std::invalid_argument);
  const std::uint64_t top = 100000;
  std::vector<std::uint64_t> sieve(top + 1, 0);
  for (std::uint64_t d = 1; d <= top; ++d) {
    for (std::uint64_t m = d; m <= top; m += d) {
      ++sieve[m];
    }
  }
  for (std::uint64_t n = 1; n <= top; ++n) {
    REQUIRE(divisor_count(n) == sieve[n]);
  }
}

TEST_CASE("divisor sum diagnostic") {
  // N_cut = 1: n = 0 gives two tuples with phi = 2 (sum 1/2); n = +-1 gives
  // one tuple with phi = -2 and weight 2^{2s}.
  for (double s : {0.0, 0.3, 0.6}) {
    CHECK(divisor_sum_diagnostic(s, 1) ==
          doctest::Approx(std::max(0.5, std::pow(2.0, 2 * s) / 4)).epsilon(1e-14));
  }
  // the sup sits at n = 0 (weight 1) for small s, so only non-decreasing
  double prev = 0;
  for (double s : {0.1, 0.4, 0.7, 0.9}) {
    const double d = divisor_sum_diagnostic(s, 24);
    CHECK(d >= prev);
    prev = d;
  }
  CHECK(divisor_sum_diagnostic(0.9, 24) > divisor_sum_diagnostic(0.1, 24));
  const double a = divisor_sum_diagnostic(0.6, 64);
  const double b = divisor_sum_diagnostic(0.6, 128);
  CHECK(std::abs(b - a) <= 0.05 * a);
  CHECK_THROWS_AS(divisor_sum_diagnostic(1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(divisor_sum_diagnostic(0.5, 0), std::invalid_argument);
}
