#ifndef NF4NLS_MODIFIED_ENERGY_HPP
#define NF4NLS_MODIFIED_ENERGY_HPP

#include "nf4nls/bitrees.hpp"
#include "nf4nls/dynamics.hpp"

#include <cstdint>
#include <vector>

namespace nf4nls {

struct EnergyOptions {
  ParityRule parity = ParityRule::Signed;
  std::uint64_t budget = enumeration_budget();
};

/**
 * A real multilinear form Re sum_m c_m e^{-i Phi_m t} prod_b v_{n_b}^{eps_b}
 * (times i when `imaginary` is set), with v^{-1} meaning conj(v).
 *
 * Every term of order J in the normal form expansion is one of these: the
 * sum over chronicles T_J and index functions collapses onto distinct
 * monomials because Phi~_J = sum_b eps_b n_b^4 is fixed by the terminals.
 */
class MultilinearForm {
public:
  MultilinearForm() = default;

  int degree() const { return degree_; }
  std::size_t size() const { return coef_.size(); }
  bool imaginary() const { return imaginary_; }

  double coefficient(std::size_t m) const { return coef_[m]; }
  std::int64_t phase(std::size_t m) const { return phase_[m]; }
  /// (n, eps) of the factors of monomial m, sorted.
  std::vector<std::pair<Freq, int>> factors(std::size_t m) const;

  /// Sum of |c_m|: bounds |value(v)| by l1_norm() * ||v||_{l^2}^degree.
  double l1_norm() const;

  double value(const Eigen::VectorXcd &v, double t) const;
  /// The form with d/dt v_b replaced by the resonant part i|v_b|^2 v_b.
  double resonant_insertion(const Eigen::VectorXcd &v, double t) const;
  /// The form with d/dt v_b replaced by rhs_b (conjugated where eps = -1).
  double insertion(const Eigen::VectorXcd &v, const Eigen::VectorXcd &rhs,
                   double t) const;

private:
  friend class NormalFormBuilder;

  int truncation_ = 0;
  int degree_ = 0;
  bool imaginary_ = false;
  std::vector<double> coef_;
  std::vector<std::int64_t> phase_;
  std::vector<int> index_;        // v offsets, degree_ per monomial
  std::vector<signed char> sign_; // parities, degree_ per monomial
};

/**
 * Compiled normal form of generations j = 2..J_max+1 at truncation N.
 *
 * Generation j carries:
 *   boundary(j)  N0^(j),  tree order j-1, indicator C_1^c..C_{j-2}^c
 *   near(j)      N1^(j),  tree order j with C_{j-1} on the last generation
 */
class NormalForm {
public:
  NormalForm(int truncation, double s, int J_max, const EnergyOptions &options = {});

  int truncation() const { return truncation_; }
  double s() const { return s_; }
  int J_max() const { return J_max_; }

  const MultilinearForm &boundary(int j) const;
  const MultilinearForm &near(int j) const;

private:
  int truncation_;
  double s_;
  int J_max_;
  std::vector<MultilinearForm> boundary_;
  std::vector<MultilinearForm> near_;
};

struct GenerationTerms {
  int j;
  double N0;
  double N1;
  double R;
  /// N0 bound constant sum |c_m| (|N0| <= C0 mass^j).
  double C0;
};

struct EnergyBreakdown {
  double s = 0;
  int N = 0;
  int J_max = 0;
  double t = 0;
  std::vector<GenerationTerms> terms; // j = 2..J_max+1
  double hs_energy = 0;               // 1/2 ||P_N v||_{H^s}^2
  double modified_energy = 0;         // hs_energy - sum N0
  /// N2^(J_max+1).
  double remainder = 0;
  /// Exact d/dt of the modified energy: sum (R + N1) + remainder.
  double derivative = 0;
  /// Filled by telescoping_residual.
  double residual = 0;
};

EnergyBreakdown evaluate(const NormalForm &form, const SpectralField &v, double t);

double eval_N0(const SpectralField &v, double t, int j, int N, double s,
               const EnergyOptions &options = {});
double eval_N1(const SpectralField &v, double t, int j, int N, double s,
               const EnergyOptions &options = {});
double eval_R(const SpectralField &v, double t, int j, int N, double s,
              const EnergyOptions &options = {});
/// N2^(j): the part of the generation-j nonresonant insertion outside C_{j-1}.
double eval_N2(const SpectralField &v, double t, int j, int N, double s,
               const EnergyOptions &options = {});

EnergyBreakdown modified_energy(const SpectralField &v, double t, double s,
                                int J_max, int N, const EnergyOptions &options = {});

/// Central difference weights for orders 2, 4 and 6.
std::vector<double> central_difference_weights(int order);

struct ResidualSample {
  double t;
  double hs_energy;
  double modified_energy;
  double fd_derivative; ///< FD d/dt of the modified energy
  double residual;      ///< fd_derivative - sum (N1 + R)
  double remainder;     ///< assembled N2^(J+1)
};

/**
 * residual(t) = FD d/dt[1/2 ||v||_{H^s}^2 - sum_{j<=J+1} N0] - sum (N1 + R),
 * at every snapshot that has a full stencil around it. Snapshots must be
 * equally spaced.
 */
std::vector<ResidualSample> telescoping_residual(const Trajectory &traj, double s,
                                                 int J, int N, int fd_order = 4,
                                                 const EnergyOptions &options = {});

struct DriftReport {
  double modified = 0;   ///< max_t |FD d/dt E|
  double unmodified = 0; ///< max_t |FD d/dt 1/2 ||v||_{H^s}^2|
  double assembled = 0;  ///< max_t |sum (R + N1) + N2|
};

DriftReport energy_drift_bound(const Trajectory &traj, double s, int J_max, int N,
                               int fd_order = 4, const EnergyOptions &options = {});

/// 1{||v||_{L^2} <= r} exp(sum_{j<=J_max+1} N0^(j)).
double density_weight(const SpectralField &v, double t, double r, double s,
                      int J_max, int N, const EnergyOptions &options = {});
/// exp(sum_j C0(j) r^{2j}), the a priori ceiling for density_weight.
double density_weight_bound(const NormalForm &form, double r);

std::uint64_t divisor_count(std::uint64_t n);

/// sup_{|n|<=N_cut} sum_{n1,n3 != n} <n>^{4s} / phi^2 over |n_i| <= N_cut.
double divisor_sum_diagnostic(double s, int N_cut);

} // namespace nf4nls

#endif // NF4NLS_MODIFIED_ENERGY_HPP
