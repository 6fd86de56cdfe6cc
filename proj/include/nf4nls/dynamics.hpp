#ifndef NF4NLS_DYNAMICS_HPP
#define NF4NLS_DYNAMICS_HPP

#include "nf4nls/spectral_core.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace nf4nls {

enum class Scheme {
  IfRk4,     ///< RK4 in the interaction picture; dispersion applied exactly
  Rk4Direct, ///< classical RK4 on the renormalized field, dispersion explicit
  /// Crank-Nicolson with the averaged nonlinearity (|u1|^2 + |u0|^2)/2.
  /// Second order; conserves mass and the Hamiltonian of the truncated
  /// system to solver tolerance at any dt.
  Conservative,
};

std::string_view scheme_tag(Scheme scheme);
Scheme parse_scheme(std::string_view tag);

struct IntegratorConfig {
  int truncation = 16;
  double dt = 1e-4;
  double t_final = 1.0;
  Scheme scheme = Scheme::IfRk4;
  int record_every = 1;
  /// Multiplies the cubic term; 0 leaves only the linear flow.
  double coupling = 1.0;
  /// Sobolev index reported in the hs_norm diagnostic.
  double hs_index = 0.6;

  void validate() const;
};

struct Diagnostics {
  double time;
  double mass;
  double hamiltonian;
  double hs_norm;
};

/// Recorded solution of the truncated system, stored in the interaction frame.
struct Trajectory {
  IntegratorConfig config;
  std::vector<SpectralField> snapshots;
  std::vector<Diagnostics> diagnostics;
  std::vector<std::string> warnings;

  std::size_t size() const { return snapshots.size(); }
  const SpectralField &operator[](std::size_t i) const { return snapshots[i]; }
};

class IntegrationError : public std::runtime_error {
public:
  IntegrationError(long step_index, const std::string &what)
      : std::runtime_error(what), step_index_(step_index) {}
  long step_index() const { return step_index_; }

private:
  long step_index_;
};

/**
 * Right-hand side of the interaction-picture equation
 *
 *   dv_n/dt = -i sum_{Gamma_N(n)} e^{-i phi t} v_{n1} conj(v_{n2}) v_{n3}
 *             + i |v_n|^2 v_n.
 *
 * The restricted sum is evaluated through the full cubic convolution of
 * w = S(t) v on a dealiased grid, minus the 2 M(v) v_n diagonal.
 */
SpectralField rhs_interaction(const SpectralField &v, double t);

/// Literal O(N^3) evaluation of the same vector field over Gamma_N(n).
SpectralField rhs_direct_oracle(const SpectralField &v, double t, int truncation);
SpectralField rhs_direct_oracle(const SpectralField &v, double t);

/// Only the Gamma_N(n) part of the vector field (resonant term removed).
Eigen::VectorXcd nonresonant_rhs(const Eigen::VectorXcd &v, double t,
                                 int truncation);

/// One fixed RK4 step of signed size dt from (v, t); returns v at t + dt.
SpectralField step(const SpectralField &v, double t, double dt,
                   const IntegratorConfig &config);

/**
 * Integrates from v0.time() to config.t_final with fixed steps. Snapshots are
 * recorded every config.record_every steps and at the end. Integration runs
 * backwards in time when t_final < v0.time().
 */
Trajectory integrate(const SpectralField &v0, const IntegratorConfig &config);

/// u(t) = G_t^{-1}[S(t) v(t)] for every recorded snapshot.
std::vector<SpectralField> reconstruct_u(const Trajectory &traj);

SpectralField reconstruct_u(const SpectralField &v, double coupling = 1.0);

namespace detail {

/// Vector-level interaction RHS with a reusable FFT workspace.
class InteractionRhs {
public:
  explicit InteractionRhs(int truncation, double coupling = 1.0);
  void operator()(const Eigen::VectorXcd &v, double t, Eigen::VectorXcd &out);

private:
  int truncation_;
  double coupling_;
  CubicProduct cubic_;
  Eigen::VectorXcd phases_;
  Eigen::VectorXcd w_;
};

} // namespace detail

} // namespace nf4nls

#endif // NF4NLS_DYNAMICS_HPP
