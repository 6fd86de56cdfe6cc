#ifndef NF4NLS_SPECTRAL_CORE_HPP
#define NF4NLS_SPECTRAL_CORE_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

namespace nf4nls {

using Complex = std::complex<double>;
using Freq = std::int64_t;

// Exact phase arithmetic. n^4 for |n| <= 2^20 needs 81 bits.
__extension__ typedef __int128 PhaseInt;

/// Largest frequency magnitude accepted by the exact phase functions.
inline constexpr Freq kMaxPhaseFrequency = Freq{1} << 20;

std::string to_string(PhaseInt value);
inline double to_double(PhaseInt value) { return static_cast<double>(value); }

enum class Frame { PhysicalU, RenormalizedU, InteractionV };

std::string_view frame_tag(Frame frame);
Frame parse_frame(std::string_view tag);

/**
 * Fourier coefficients c_n, |n| <= N, of a field on the circle together with
 * the representation it lives in and its model time.
 *
 * Coefficients are stored contiguously with mode n at offset n + N. The
 * constructor rejects wrong lengths and non-finite entries, so every
 * SpectralField in circulation satisfies both invariants.
 */
class SpectralField {
public:
  SpectralField(Frame frame, int truncation, Eigen::VectorXcd coeffs,
                double time = 0.0);

  static SpectralField zeros(Frame frame, int truncation, double time = 0.0);

  Frame frame() const { return frame_; }
  int truncation() const { return truncation_; }
  double time() const { return time_; }
  Eigen::Index size() const { return coeffs_.size(); }

  const Eigen::VectorXcd &coeffs() const { return coeffs_; }

  /// Coefficient of mode n; zero outside the truncation window.
  Complex operator[](Freq n) const;

  SpectralField with_coeffs(Eigen::VectorXcd coeffs) const;
  SpectralField with_mode(Freq n, Complex value) const;
  SpectralField at_time(double time) const;

private:
  Frame frame_;
  int truncation_;
  Eigen::VectorXcd coeffs_;
  double time_;
};

/// Physical grid x_m = 2 pi m / M used for dealiased products.
struct GridSpec {
  int truncation;
  int points;

  GridSpec(int truncation, int points);

  /// Smallest power of two with M >= 3(2N+1).
  static GridSpec dealiased(int truncation);

  double x(int m) const;
};

/// (n1, n2, n3, n) on the plane n = n1 - n2 + n3.
struct PhaseTuple {
  Freq n1;
  Freq n2;
  Freq n3;
  Freq n;

  PhaseTuple(Freq n1, Freq n2, Freq n3, Freq n);
  static PhaseTuple from_children(Freq n1, Freq n2, Freq n3) {
    return PhaseTuple(n1, n2, n3, n1 - n2 + n3);
  }

  /// n1 != n and n3 != n.
  bool non_resonant() const { return n1 != n && n3 != n; }
};

double japanese_bracket(double n);

double sobolev_norm(const SpectralField &f, double sigma);
double mass(const SpectralField &f);
double mass(const Eigen::VectorXcd &coeffs);

/// 1/2 sum n^4 |c_n|^2 + 1/4 mean(|u|^4) on a dealiased grid.
double hamiltonian(const SpectralField &f, const GridSpec &grid);
double hamiltonian(const SpectralField &f);

PhaseInt phase_phi(const PhaseTuple &p);
PhaseInt phase_phi_factored(const PhaseTuple &p);
PhaseInt phase_mu(const PhaseTuple &p);

SpectralField linear_propagate(const SpectralField &f, double dt);
SpectralField gauge(const SpectralField &f, double t);

/// Exact finite Fourier synthesis u(x_m) = sum_n c_n e^{i n x_m}.
Eigen::VectorXcd to_physical(const SpectralField &f, const GridSpec &grid);

/// Inverse of to_physical on band-limited data (requires M >= 2N+1).
Eigen::VectorXcd from_physical(const Eigen::VectorXcd &values, int truncation);

/**
 * Moves a field between the physical, renormalized and interaction frames at
 * its own time t:
 *   u~ = G_t[u] = e^{2it M(u)} u,   v_n = e^{i n^4 t} u~_n.
 */
SpectralField convert_frame(const SpectralField &f, Frame target);

// Field CSV: "# frame=<tag> N=<N> t=<time>", then "n,re,im" rows.
void write_field_csv(std::ostream &out, const SpectralField &f);
SpectralField read_field_csv(std::istream &in);

namespace detail {

/// Coefficient vector of e^{i sign n^4 t}, n = -N..N.
Eigen::VectorXcd dispersion_phases(int truncation, double t, double sign);

/**
 * Reusable FFT workspace for cubic products of band-limited fields. Not
 * thread-safe; give each thread its own.
 */
class CubicProduct {
public:
  explicit CubicProduct(const GridSpec &grid);

  /// Truncated Fourier coefficients of |w|^2 w.
  const Eigen::VectorXcd &operator()(const Eigen::VectorXcd &w);
  /// Grid samples of the last synthesized field.
  const Eigen::VectorXcd &synthesize(const Eigen::VectorXcd &w);

  const GridSpec &grid() const { return grid_; }

private:
  GridSpec grid_;
  struct Impl;
  std::shared_ptr<Impl> impl_;
  Eigen::VectorXcd values_;
  Eigen::VectorXcd result_;
};

} // namespace detail

} // namespace nf4nls

#endif // NF4NLS_SPECTRAL_CORE_HPP
