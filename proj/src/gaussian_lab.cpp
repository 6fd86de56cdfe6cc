#include "nf4nls/gaussian_lab.hpp"

#include <boost/random/normal_distribution.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nf4nls {

std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x6e66346eU};
  return std::mt19937_64(seq);
}

Complex RandomFieldSample::coefficient(Freq n) const {
  if (n < -truncation || n > truncation) {
    return {0.0, 0.0};
  }
  return coeffs[n + truncation];
}

Complex RandomFieldSample::evaluate(double x) const {
  Complex sum = coeffs[truncation];
  for (int n = 1; n <= truncation; ++n) {
    const Complex e = std::polar(1.0, std::fmod(n * x, 2.0 * std::numbers::pi));
    sum += coeffs[truncation + n] * e + coeffs[truncation - n] * std::conj(e);
  }
  return sum;
}

double tail_variance(double s, int N_samp) {
  if (!(s > 0.5)) {
    throw std::invalid_argument("tail_variance: s must exceed 1/2");
  }
  constexpr int kExplicit = 20000;
  double sum = 0.0;
  for (int n = N_samp + kExplicit; n > N_samp; --n) {
    sum += std::pow(1.0 + double(n) * n, -s);
  }
  const double edge = N_samp + kExplicit + 0.5;
  sum += std::pow(edge, 1.0 - 2.0 * s) / (2.0 * s - 1.0);
  return 4.0 * sum;
}

namespace {

Eigen::VectorXcd synthesize(const Eigen::VectorXcd &coeffs, int N, int M) {
  if (M < 2 * N + 1) {
    throw std::invalid_argument("sample grid must have at least 2N+1 points");
  }
  std::vector<Complex> bins(M, Complex{0.0, 0.0});
  for (int n = -N; n <= N; ++n) {
    bins[((n % M) + M) % M] += coeffs[n + N];
  }
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> out;
  fft.inv(out, bins);
  return Eigen::Map<Eigen::VectorXcd>(out.data(), M);
}

} // namespace

MuSampler::MuSampler(double s, int N_samp)
    : s_(s), truncation_(N_samp), weight_(N_samp + 1) {
  if (!(s > 0.5)) {
    throw std::invalid_argument("sample_mu_s: s must exceed 1/2");
  }
  if (N_samp < 0) {
    throw std::invalid_argument("sample_mu_s: N_samp must be >= 0");
  }
  for (int n = 0; n <= N_samp; ++n) {
    weight_[n] = std::pow(1.0 + double(n) * n, -0.5 * s);
  }
  tail_ = tail_variance(s, N_samp);
}

RandomFieldSample MuSampler::draw(std::uint64_t seed, std::uint64_t index,
                                  int M_samp) const {
  const int N = truncation_;
  RandomFieldSample out;
  out.s = s_;
  out.truncation = N;
  out.seed = seed;
  out.index = index;
  out.tail_variance = tail_;
  out.coeffs.resize(2 * N + 1);
  auto rng = sample_stream(seed, index);
  // Ziggurat: about twice as fast as std::normal_distribution.
  boost::random::normal_distribution<double> normal;
  auto put = [&](int n) {
    const double re = normal(rng);
    const double im = normal(rng);
    out.coeffs[n + N] = Complex(re, im) * weight_[n < 0 ? -n : n];
  };
  put(0);
  for (int n = 1; n <= N; ++n) {
    put(n);
    put(-n);
  }
  if (M_samp > 0) {
    out.grid = synthesize(out.coeffs, N, M_samp);
  }
  return out;
}

RandomFieldSample sample_mu_s(double s, int N_samp, std::uint64_t seed, int M_samp,
                              std::uint64_t index) {
  return MuSampler(s, N_samp).draw(seed, index, M_samp);
}

Complex dispersionless_flow(Complex value, double t) {
  return std::polar(1.0, -t * std::norm(value)) * value;
}

Eigen::VectorXcd dispersionless_flow(const Eigen::VectorXcd &values, double t) {
  Eigen::VectorXcd out(values.size());
  for (Eigen::Index m = 0; m < values.size(); ++m) {
    out[m] = dispersionless_flow(values[m], t);
  }
  return out;
}

Eigen::VectorXcd dispersionless_flow(const RandomFieldSample &sample, double t) {
  if (sample.grid.size() == 0) {
    throw std::invalid_argument("dispersionless_flow: sample has no grid values");
  }
  return dispersionless_flow(sample.grid, t);
}

double psi(double h) {
  if (!(h > 0.0) || h > std::exp(-std::numbers::e) * (1.0 + 1e-15)) {
    throw std::domain_error("psi: h must lie in (0, e^{-e}]");
  }
  return std::sqrt(2.0 * h * std::log(std::log(1.0 / h)));
}

double critical_modulus(double h) {
  if (!(h > 0.0) || !(h < std::exp(-std::numbers::e))) {
    throw std::domain_error("critical_modulus: h must lie in (0, e^{-e})");
  }
  const double L = std::log(1.0 / h);
  const double lll = std::log(std::log(L));
  if (!(lll > 0.0)) {
    throw std::domain_error("critical_modulus: triple logarithm is not positive");
  }
  return std::pow(2.0, 1.5) * h * std::sqrt(L * lll);
}

double increment_variance(double s, double x, int N_cut) {
  double sum = 0.0;
  for (int n = N_cut; n >= 1; --n) {
    const double half = std::sin(0.5 * n * x);
    // |1 - e^{inx}|^2 = 4 sin^2(nx/2), same for -n
    sum += 2.0 * 4.0 * half * half * std::pow(1.0 + double(n) * n, -s);
  }
  return 2.0 * sum;
}

std::string_view normalizer_tag(Normalizer n) {
  switch (n) {
  case Normalizer::Classical:
    return "classical";
  case Normalizer::Fractional:
    return "fractional";
  case Normalizer::Critical:
    return "critical";
  }
  return "?";
}

Normalizer parse_normalizer(std::string_view tag) {
  if (tag == "classical") {
    return Normalizer::Classical;
  }
  if (tag == "fractional") {
    return Normalizer::Fractional;
  }
  if (tag == "critical") {
    return Normalizer::Critical;
  }
  throw std::invalid_argument("unknown normalizer '" + std::string(tag) + "'");
}

namespace {

double normalizer_value(Normalizer kind, double h, const RandomFieldSample &sample) {
  const double root_2pi = std::sqrt(2.0 * std::numbers::pi);
  switch (kind) {
  case Normalizer::Classical:
    return root_2pi * psi(h);
  case Normalizer::Fractional: {
    const double var = 0.5 * increment_variance(sample.s, h, sample.truncation);
    return std::sqrt(2.0 * var * std::log(std::log(1.0 / h)));
  }
  case Normalizer::Critical:
    return root_2pi * critical_modulus(h);
  }
  return 1.0;
}

// u(x0 + h) - u(x0) summed with e^{inh} - 1 = -2 sin^2(nh/2) + i sin(nh) so
// that small increments keep their relative accuracy.
Complex increment(const Eigen::VectorXcd &a, int N, double h) {
  Complex sum{0.0, 0.0};
  for (int n = 1; n <= N; ++n) {
    const double half = std::sin(0.5 * n * h);
    const Complex d(-2.0 * half * half, std::sin(n * h));
    sum += a[N + n] * d + a[N - n] * std::conj(d);
  }
  return sum;
}

} // namespace

LILReport lil_ratio(const RandomFieldSample &sample, double x0, int k_min, int k_max,
                    Normalizer normalizer, double t) {
  if (k_min > k_max || k_min < 1) {
    throw std::invalid_argument("lil_ratio: need 1 <= k_min <= k_max");
  }
  const int N = sample.truncation;
  if (double(N) * std::ldexp(1.0, -k_max) < 1.0 / 16.0) {
    throw std::domain_error("lil_ratio: series truncation N = " + std::to_string(N) +
                            " does not resolve h = 2^-" + std::to_string(k_max));
  }
  // a_n = c_n e^{i n x0}
  Eigen::VectorXcd a(2 * N + 1);
  for (int n = -N; n <= N; ++n) {
    const double phase = std::fmod(double(n) * x0, 2.0 * std::numbers::pi);
    a[n + N] = sample.coeffs[n + N] * std::polar(1.0, phase);
  }
  const Complex u0 = a.sum();
  const Complex f0 = dispersionless_flow(u0, t);

  LILReport report;
  report.x0 = x0;
  report.t = t;
  report.normalizer = normalizer;
  for (int k = k_min; k <= k_max; ++k) {
    const double h = std::ldexp(1.0, -k);
    const double norm = normalizer_value(normalizer, h, sample);
    const Complex du = increment(a, N, h);
    const double pre = std::abs(du.real()) / norm;
    const double post =
        t == 0.0 ? pre : std::abs((dispersionless_flow(u0 + du, t) - f0).real()) / norm;
    report.k.push_back(k);
    report.pre.push_back(pre);
    report.post.push_back(post);
    report.pre_max = std::max(report.pre_max, pre);
    report.post_max = std::max(report.post_max, post);
  }
  return report;
}

RankTest mann_whitney_greater(const std::vector<double> &x, const std::vector<double> &y) {
  const std::size_t n1 = x.size(), n2 = y.size();
  if (n1 == 0 || n2 == 0) {
    throw std::invalid_argument("mann_whitney_greater: empty sample");
  }
  std::vector<std::pair<double, int>> all;
  for (double v : x) {
    all.emplace_back(v, 0);
  }
  for (double v : y) {
    all.emplace_back(v, 1);
  }
  std::sort(all.begin(), all.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });
  const double n = static_cast<double>(all.size());
  double rank_sum = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) {
      ++j;
    }
    const double avg = 0.5 * (double(i + 1) + double(j));
    const double t = double(j - i);
    tie_term += t * t * t - t;
    for (std::size_t q = i; q < j; ++q) {
      if (all[q].second == 0) {
        rank_sum += avg;
      }
    }
    i = j;
  }
  const double a = double(n1), b = double(n2);
  RankTest out;
  out.u = rank_sum - a * (a + 1) / 2.0;
  const double mean = a * b / 2.0;
  const double var = a * b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    out.z = 0.0;
    out.p_value = 1.0;
    return out;
  }
  out.z = (out.u - mean - 0.5) / std::sqrt(var);
  out.p_value = 0.5 * std::erfc(out.z / std::sqrt(2.0));
  return out;
}

double LILExperimentConfig::M() const {
  return std::sqrt(-0.5 * std::numbers::pi + 2.0 * std::numbers::pi * k_branch);
}

void LILExperimentConfig::validate() const {
  if (!(s > 0.5)) {
    throw std::invalid_argument("lil experiment: s must exceed 1/2");
  }
  if (k_branch < 1) {
    throw std::invalid_argument("lil experiment: k must be >= 1");
  }
  if (!(eps > 0.0)) {
    throw std::invalid_argument("lil experiment: eps must be positive");
  }
  if (target_conditioned < 1 || max_draws < 1 || baseline < 0) {
    throw std::invalid_argument("lil experiment: sample counts must be positive");
  }
  if (N_samp < 1 || k_min < 1 || k_min > k_max) {
    throw std::invalid_argument("lil experiment: bad truncation or scale range");
  }
}

double median(std::vector<double> values) {
  if (values.empty()) {
    return 0.0;
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

LILExperimentReport lil_breakdown_experiment(const LILExperimentConfig &config) {
  config.validate();
  const double M = config.M();
  const double M2 = M * M;
  LILExperimentReport report;
  report.config = config;
  std::vector<double> pre, post;
  int baseline_hits = 0, baseline_count = 0;
  const MuSampler sampler(config.s, config.N_samp);
  std::vector<Complex> phases(2 * config.N_samp + 1);
  for (int n = -config.N_samp; n <= config.N_samp; ++n) {
    phases[n + config.N_samp] =
        std::polar(1.0, std::fmod(double(n) * config.x0, 2.0 * std::numbers::pi));
  }
  std::uint64_t i = 0;
  for (; i < config.max_draws && report.conditioned < config.target_conditioned; ++i) {
    const RandomFieldSample sample = sampler.draw(config.seed, i);
    Complex u0{0.0, 0.0};
    for (int n = -config.N_samp; n <= config.N_samp; ++n) {
      u0 += sample.coeffs[n + config.N_samp] * phases[n + config.N_samp];
    }
    const bool in_A =
        std::abs(u0.real() - M) <= config.eps && std::abs(u0.imag()) <= config.eps;
    const bool in_baseline = i < static_cast<std::uint64_t>(config.baseline);
    if (!in_A && !in_baseline) {
      continue;
    }
    const LILReport r = lil_ratio(sample, config.x0, config.k_min, config.k_max,
                                  config.normalizer, config.t);
    report.rows.push_back({i, in_A, r.pre_max, r.post_max});
    if (in_A) {
      ++report.conditioned;
      pre.push_back(r.pre_max);
      post.push_back(r.post_max);
    }
    if (in_baseline) {
      ++baseline_count;
      if (r.post_max > M2 && r.pre_max < 2.0) {
        ++baseline_hits;
      }
    }
  }
  report.draws = i;
  if (report.conditioned == 0) {
    throw std::runtime_error("lil experiment: no sample landed in the conditioning set "
                             "after " + std::to_string(i) +
                             " draws; raise max_draws or eps");
  }
  int hits = 0;
  for (std::size_t q = 0; q < pre.size(); ++q) {
    if (post[q] > M2 && pre[q] < 2.0) {
      ++hits;
    }
  }
  report.exceed_fraction = double(hits) / double(pre.size());
  report.baseline_exceed_fraction =
      baseline_count ? double(baseline_hits) / double(baseline_count) : 0.0;
  report.median_pre = median(pre);
  report.median_post = median(post);
  report.rank = mann_whitney_greater(post, pre);
  return report;
}

RandomFieldSample derivative_field(const RandomFieldSample &sample, int r) {
  if (r < 0) {
    throw std::invalid_argument("derivative_field: r must be >= 0");
  }
  if (!(r < sample.s - 0.5)) {
    throw std::invalid_argument("derivative_field: r = " + std::to_string(r) +
                                " needs r < s - 1/2");
  }
  RandomFieldSample out = sample;
  out.s = sample.s - r;
  const int N = sample.truncation;
  if (r > 0) {
    for (int n = -N; n <= N; ++n) {
      // (in)^r = n^r i^r, applied as a real scale and an exact quarter turn
      const double scale = std::pow(double(n), r);
      Complex c = sample.coeffs[n + N] * scale;
      for (int q = 0; q < r % 4; ++q) {
        c = Complex(-c.imag(), c.real());
      }
      out.coeffs[n + N] = c;
    }
    out.coeffs[N] = 0.0;
    out.tail_variance = tail_variance(out.s, N);
  }
  if (sample.grid.size() > 0) {
    out.grid = synthesize(out.coeffs, N, static_cast<int>(sample.grid.size()));
  }
  return out;
}

KakutaniReport kakutani_divergence(const std::vector<double> &sigma_sq,
                                   const std::vector<double> &sigma_sq_tilde) {
  if (sigma_sq.size() != sigma_sq_tilde.size() || sigma_sq.empty()) {
    throw std::invalid_argument("kakutani_divergence: sequences must have equal, nonzero length");
  }
  KakutaniReport out;
  std::vector<double> terms(sigma_sq.size());
  for (std::size_t n = 0; n < sigma_sq.size(); ++n) {
    if (!(sigma_sq[n] > 0.0) || !(sigma_sq_tilde[n] > 0.0)) {
      throw std::invalid_argument("kakutani_divergence: variances must be positive");
    }
    const double d = sigma_sq_tilde[n] / sigma_sq[n] - 1.0;
    terms[n] = d * d;
    out.sum += terms[n];
  }
  // Least-squares slope of log term against log n over the second half.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t n = terms.size() / 2; n < terms.size(); ++n) {
    if (terms[n] <= 0.0) {
      continue;
    }
    const double x = std::log(double(n + 1)), y = std::log(terms[n]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) {
    out.tail_exponent = INFINITY;
    out.converges = true;
    return out;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  out.tail_exponent = -slope;
  out.converges = out.tail_exponent > 1.0;
  return out;
}

} // namespace nf4nls
