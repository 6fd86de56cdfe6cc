#ifndef NF4NLS_GAUSSIAN_LAB_HPP
#define NF4NLS_GAUSSIAN_LAB_HPP

#include "nf4nls/spectral_core.hpp"

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace nf4nls {

/// Generator for sample `index` of the ensemble seeded by `seed`. Each index
/// gets its own stream, so any sample can be regenerated in isolation.
std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index);

/**
 * A draw of u = sum_{|n| <= N} g_n / <n>^s e^{inx} with Re g_n, Im g_n
 * independent standard normals (so E|g_n|^2 = 2).
 */
struct RandomFieldSample {
  double s = 1.0;
  int truncation = 0;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  Eigen::VectorXcd coeffs; ///< mode n at offset n + N
  Eigen::VectorXcd grid;   ///< u(2 pi m / M), empty when M = 0
  /// sum_{|n| > N} 2 <n>^{-2s}, the variance the truncation leaves out.
  double tail_variance = 0.0;

  Complex coefficient(Freq n) const;
  /// Direct evaluation of the truncated series at x.
  Complex evaluate(double x) const;
};

/// Modes are drawn in the order 0, 1, -1, 2, -2, ... so that truncations of
/// one stream are nested.
RandomFieldSample sample_mu_s(double s, int N_samp, std::uint64_t seed,
                              int M_samp = 0, std::uint64_t index = 0);

double tail_variance(double s, int N_samp);

/// Reusable sampler: the <n>^{-s} weights and tail variance are computed once.
class MuSampler {
public:
  MuSampler(double s, int N_samp);
  RandomFieldSample draw(std::uint64_t seed, std::uint64_t index = 0,
                         int M_samp = 0) const;

private:
  double s_;
  int truncation_;
  std::vector<double> weight_;
  double tail_;
};

/// e^{-it|u|^2} u pointwise.
Eigen::VectorXcd dispersionless_flow(const Eigen::VectorXcd &values, double t);
Eigen::VectorXcd dispersionless_flow(const RandomFieldSample &sample, double t);
Complex dispersionless_flow(Complex value, double t);

/// sqrt(2h log log(1/h)) for 0 < h <= e^{-e}.
double psi(double h);
/// 2^{3/2} h sqrt(log(1/h) log log log(1/h)) for 0 < h < e^{-e}.
double critical_modulus(double h);

/// 2 sum_{|n| <= N_cut} |1 - e^{inx}|^2 / <n>^{2s} = E|u(x) - u(0)|^2.
double increment_variance(double s, double x, int N_cut);

enum class Normalizer { Classical, Fractional, Critical };
std::string_view normalizer_tag(Normalizer n);
Normalizer parse_normalizer(std::string_view tag);

struct LILReport {
  double x0 = 0.0;
  double t = 0.0;
  Normalizer normalizer = Normalizer::Classical;
  std::vector<int> k;          ///< h_k = 2^{-k}
  std::vector<double> pre;     ///< |Re u(x0+h) - Re u(x0)| / normalizer(h)
  std::vector<double> post;    ///< same after the dispersionless flow to time t
  double pre_max = 0.0;
  double post_max = 0.0;
};

/**
 * Finite-scale LIL ratios of Re u at x0 over h_k = 2^{-k}, k_min..k_max.
 * Classical uses sqrt(2 pi) psi(h): under the sampling convention Re u has
 * increments of variance about 2 pi h at s = 1. Fractional uses
 * sqrt(2 sigma^2(h) log log(1/h)) with sigma^2 the exact variance of the
 * truncated Re increment. Critical uses sqrt(2 pi) critical_modulus(h).
 */
LILReport lil_ratio(const RandomFieldSample &sample, double x0, int k_min, int k_max,
                    Normalizer normalizer, double t = 0.0);

struct RankTest {
  double u = 0.0;       ///< Mann-Whitney U of the first sample
  double z = 0.0;
  double p_value = 1.0; ///< one-sided, first sample stochastically larger
};

RankTest mann_whitney_greater(const std::vector<double> &x, const std::vector<double> &y);

struct LILExperimentConfig {
  double s = 1.0;
  double t = 1.0;
  int k_branch = 3;  ///< M^2 = -pi/2 + 2 pi k
  double eps = 0.3;
  std::uint64_t max_draws = 100000;
  int target_conditioned = 40;
  /// Unconditioned draws whose ratios are also computed as a baseline.
  int baseline = 32;
  std::uint64_t seed = 1;
  int N_samp = 1 << 16;
  int k_min = 6;
  int k_max = 20;
  double x0 = 3.14159265358979323846;
  Normalizer normalizer = Normalizer::Classical;

  double M() const;
  void validate() const;
};

struct LILSampleRow {
  std::uint64_t sample;
  bool conditioned;
  double pre_ratio_max;
  double post_ratio_max;
};

struct LILExperimentReport {
  LILExperimentConfig config;
  std::uint64_t draws = 0;
  std::vector<LILSampleRow> rows; ///< conditioned samples, then the baseline
  int conditioned = 0;
  /// Fraction of conditioned samples with post > M^2 while pre < 2.
  double exceed_fraction = 0.0;
  double baseline_exceed_fraction = 0.0;
  double median_pre = 0.0;
  double median_post = 0.0;
  RankTest rank;
};

/**
 * Draws samples until target_conditioned land in
 * A = {|Re u(x0) - M| <= eps, |Im u(x0)| <= eps} or max_draws is reached,
 * then compares post-flow and pre-flow max ratios on the conditioned set.
 * Throws std::runtime_error when no sample lands in A.
 */
LILExperimentReport lil_breakdown_experiment(const LILExperimentConfig &config);

/// Coefficients times (in)^r; n = 0 dropped for r >= 1. Needs r < s - 1/2.
RandomFieldSample derivative_field(const RandomFieldSample &sample, int r);

struct KakutaniReport {
  double sum = 0.0;
  /// Fitted p in term_n ~ n^{-p} over the second half of the sequence.
  double tail_exponent = 0.0;
  bool converges = false; ///< tail_exponent > 1
};

/// sum_n (sigma_tilde_n^2 / sigma_n^2 - 1)^2 with a tail-slope verdict.
KakutaniReport kakutani_divergence(const std::vector<double> &sigma_sq,
                                   const std::vector<double> &sigma_sq_tilde);

double median(std::vector<double> values);

} // namespace nf4nls

#endif // NF4NLS_GAUSSIAN_LAB_HPP
