#include "nf4nls/modified_energy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

namespace nf4nls {

namespace {

struct Key {
  std::uint64_t factors;
  std::int64_t phase;
  bool operator==(const Key &o) const {
    return factors == o.factors && phase == o.phase;
  }
};

struct KeyHash {
  std::size_t operator()(const Key &k) const {
    std::uint64_t h = k.factors * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.phase) + 0x632BE59BD9B4E019ULL + (h << 6) +
         (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Interaction triples (n1, n3) of Gamma_N(n) sorted by phi.
struct Triple {
  std::int64_t phi;
  int n1;
  int n2;
  int n3;
};

} // namespace

class NormalFormBuilder {
public:
  NormalFormBuilder(int N, double s, const EnergyOptions &options)
      : N_(N), s_(s), options_(options),
        bits_(std::bit_width(static_cast<unsigned>(2 * (2 * N + 1) - 1))),
        triples_(2 * N + 1) {
    for (int n = -N; n <= N; ++n) {
      auto &list = triples_[n + N];
      for (int n1 = -N; n1 <= N; ++n1) {
        for (int n3 = -N; n3 <= N; ++n3) {
          const int n2 = n1 + n3 - n;
          if (n1 == n || n3 == n || n2 < -N || n2 > N) {
            continue;
          }
          list.push_back({narrow(phase_phi(PhaseTuple(n1, n2, n3, n))), n1, n2, n3});
        }
      }
      std::stable_sort(list.begin(), list.end(),
                       [](const Triple &a, const Triple &b) { return a.phi < b.phi; });
    }
  }

  // N0^(2): sum over T_1, no cutoff.
  MultilinearForm first_generation() {
    Map map;
    for (int n = -N_; n <= N_; ++n) {
      const double weight = std::pow(japanese_bracket(n), 2.0 * s_);
      for (const Triple &tr : triples_[n + N_]) {
        std::vector<int> f{symbol(tr.n1, +1), symbol(tr.n2, child2(+1)),
                           symbol(tr.n3, +1), symbol(n, -1)};
        add(map, f, tr.phi, weight / static_cast<double>(tr.phi));
      }
    }
    return finish(map, 4, false);
  }

  enum class Cut { Complement, Within };

  // Expands every factor of `form` (tree order J) by one generation. With
  // Complement the result is N0 of order J+1: coefficient -eps_b c / Phi'.
  // With Within it is N1 of the same generation: coefficient eps_b c, times i.
  MultilinearForm extend(const MultilinearForm &form, int J, Cut cut) {
    const std::int64_t K = narrow(cutoff_threshold(J));
    const int d = form.degree_;
    Map map;
    std::vector<int> base(d), next;
    next.reserve(d + 2);
    std::uint64_t used = 0;
    for (std::size_t m = 0; m < form.size(); ++m) {
      const double c = form.coef_[m];
      const std::int64_t Phi = form.phase_[m];
      for (int p = 0; p < d; ++p) {
        base[p] = form.index_[m * d + p] * 2 + (form.sign_[m * d + p] > 0 ? 1 : 0);
      }
      for (int p = 0; p < d; ++p) {
        // Expanding either of two identical factors gives identical terms;
        // both are kept since they come from distinct terminals.
        const int nb = form.index_[m * d + p] - N_;
        const int eps = form.sign_[m * d + p];
        const auto &list = triples_[nb + N_];
        // eps * phi in [-K - Phi, K - Phi]
        std::int64_t lo = -K - Phi, hi = K - Phi;
        if (eps < 0) {
          std::swap(lo, hi);
          lo = -lo;
          hi = -hi;
        }
        const auto first = std::lower_bound(
            list.begin(), list.end(), lo,
            [](const Triple &t, std::int64_t x) { return t.phi < x; });
        const auto last = std::upper_bound(
            first, list.end(), hi,
            [](std::int64_t x, const Triple &t) { return x < t.phi; });
        auto emit = [&](const Triple &tr) {
          if (++used > options_.budget) {
            throw BudgetExceeded("normal form: enumeration exceeded the budget of " +
                                 std::to_string(options_.budget) +
                                 " assignments; lower N or J, or raise NF4NLS_BUDGET");
          }
          const std::int64_t phase = Phi + (eps > 0 ? tr.phi : -tr.phi);
          next.clear();
          for (int q = 0; q < d; ++q) {
            if (q != p) {
              next.push_back(base[q]);
            }
          }
          next.push_back(symbol(tr.n1, eps));
          next.push_back(symbol(tr.n2, child2(eps)));
          next.push_back(symbol(tr.n3, eps));
          const double coef = cut == Cut::Complement
                                  ? -eps * c / static_cast<double>(phase)
                                  : eps * c;
          add(map, next, phase, coef);
        };
        if (cut == Cut::Within) {
          std::for_each(first, last, emit);
        } else {
          std::for_each(list.begin(), first, emit);
          std::for_each(last, list.end(), emit);
        }
      }
    }
    return finish(map, d + 2, cut == Cut::Within);
  }

private:
  using Map = std::unordered_map<Key, double, KeyHash>;

  static std::int64_t narrow(PhaseInt x) { return static_cast<std::int64_t>(x); }

  int child2(int eps) const {
    return options_.parity == ParityRule::Signed ? -eps : eps;
  }

  int symbol(int n, int eps) const { return (n + N_) * 2 + (eps > 0 ? 1 : 0); }

  void add(Map &map, std::vector<int> &f, std::int64_t phase, double coef) {
    if (static_cast<int>(f.size()) * bits_ > 64) {
      throw std::invalid_argument(
          "normal form: monomial key does not fit; lower N or J");
    }
    std::sort(f.begin(), f.end());
    std::uint64_t key = 0;
    for (int sym : f) {
      key = (key << bits_) | static_cast<std::uint64_t>(sym);
    }
    map[Key{key, phase}] += coef;
  }

  MultilinearForm finish(const Map &map, int degree, bool imaginary) const {
    std::vector<std::pair<Key, double>> entries(map.begin(), map.end());
    std::sort(entries.begin(), entries.end(), [](const auto &a, const auto &b) {
      return a.first.factors != b.first.factors ? a.first.factors < b.first.factors
                                                : a.first.phase < b.first.phase;
    });
    MultilinearForm form;
    form.truncation_ = N_;
    form.degree_ = degree;
    form.imaginary_ = imaginary;
    const std::uint64_t mask = (std::uint64_t{1} << bits_) - 1;
    for (const auto &[key, coef] : entries) {
      if (coef == 0.0) {
        continue;
      }
      form.coef_.push_back(coef);
      form.phase_.push_back(key.phase);
      for (int p = degree - 1; p >= 0; --p) {
        const auto sym = static_cast<int>((key.factors >> (p * bits_)) & mask);
        form.index_.push_back(sym / 2);
        form.sign_.push_back(sym % 2 ? 1 : -1);
      }
    }
    return form;
  }

  int N_;
  double s_;
  EnergyOptions options_;
  int bits_;
  std::vector<std::vector<Triple>> triples_;
};

std::vector<std::pair<Freq, int>> MultilinearForm::factors(std::size_t m) const {
  std::vector<std::pair<Freq, int>> out;
  for (int p = 0; p < degree_; ++p) {
    out.emplace_back(index_[m * degree_ + p] - truncation_, sign_[m * degree_ + p]);
  }
  return out;
}

double MultilinearForm::l1_norm() const {
  double sum = 0.0;
  for (double c : coef_) {
    sum += std::abs(c);
  }
  return sum;
}

namespace {

inline Complex pick(const Eigen::VectorXcd &v, int idx, int sign) {
  return sign > 0 ? v[idx] : std::conj(v[idx]);
}

void check_length(const Eigen::VectorXcd &v, int N) {
  if (v.size() != 2 * N + 1) {
    throw std::invalid_argument("multilinear form: coefficient vector has wrong length");
  }
}

} // namespace

double MultilinearForm::value(const Eigen::VectorXcd &v, double t) const {
  check_length(v, truncation_);
  double sum = 0.0;
  const int d = degree_;
  for (std::size_t m = 0; m < coef_.size(); ++m) {
    Complex z = coef_[m] * std::polar(1.0, -static_cast<double>(phase_[m]) * t);
    for (int p = 0; p < d; ++p) {
      z *= pick(v, index_[m * d + p], sign_[m * d + p]);
    }
    sum += imaginary_ ? -z.imag() : z.real();
  }
  return sum;
}

double MultilinearForm::resonant_insertion(const Eigen::VectorXcd &v, double t) const {
  check_length(v, truncation_);
  double sum = 0.0;
  const int d = degree_;
  for (std::size_t m = 0; m < coef_.size(); ++m) {
    Complex z = coef_[m] * std::polar(1.0, -static_cast<double>(phase_[m]) * t);
    double weight = 0.0;
    for (int p = 0; p < d; ++p) {
      const int idx = index_[m * d + p];
      z *= pick(v, idx, sign_[m * d + p]);
      weight += sign_[m * d + p] * std::norm(v[idx]);
    }
    // (i |v|^2 v)^eps = i eps |v|^2 v^eps
    const Complex w = Complex(0.0, weight) * z;
    sum += imaginary_ ? -w.imag() : w.real();
  }
  return sum;
}

double MultilinearForm::insertion(const Eigen::VectorXcd &v, const Eigen::VectorXcd &rhs,
                                  double t) const {
  check_length(v, truncation_);
  check_length(rhs, truncation_);
  double sum = 0.0;
  const int d = degree_;
  std::vector<Complex> prefix(d + 1), suffix(d + 1);
  for (std::size_t m = 0; m < coef_.size(); ++m) {
    const int *idx = &index_[m * d];
    const signed char *sgn = &sign_[m * d];
    prefix[0] = 1.0;
    for (int p = 0; p < d; ++p) {
      prefix[p + 1] = prefix[p] * pick(v, idx[p], sgn[p]);
    }
    suffix[d] = 1.0;
    for (int p = d - 1; p >= 0; --p) {
      suffix[p] = suffix[p + 1] * pick(v, idx[p], sgn[p]);
    }
    Complex acc = 0.0;
    for (int p = 0; p < d; ++p) {
      acc += prefix[p] * pick(rhs, idx[p], sgn[p]) * suffix[p + 1];
    }
    const Complex z =
        coef_[m] * std::polar(1.0, -static_cast<double>(phase_[m]) * t) * acc;
    sum += imaginary_ ? -z.imag() : z.real();
  }
  return sum;
}

NormalForm::NormalForm(int truncation, double s, int J_max, const EnergyOptions &options)
    : truncation_(truncation), s_(s), J_max_(J_max) {
  if (truncation < 1) {
    throw std::invalid_argument("NormalForm: N must be >= 1");
  }
  if (J_max < 1 || J_max > kMaxChronicleLength) {
    throw std::invalid_argument("NormalForm: J_max out of range");
  }
  NormalFormBuilder builder(truncation, s, options);
  boundary_.push_back(builder.first_generation());
  for (int J = 1; J <= J_max; ++J) {
    near_.push_back(
        builder.extend(boundary_.back(), J, NormalFormBuilder::Cut::Within));
    if (J < J_max) {
      boundary_.push_back(
          builder.extend(boundary_.back(), J, NormalFormBuilder::Cut::Complement));
    }
  }
}

const MultilinearForm &NormalForm::boundary(int j) const {
  if (j < 2 || j > J_max_ + 1) {
    throw std::invalid_argument("NormalForm: generation out of range");
  }
  return boundary_[j - 2];
}

const MultilinearForm &NormalForm::near(int j) const {
  if (j < 2 || j > J_max_ + 1) {
    throw std::invalid_argument("NormalForm: generation out of range");
  }
  return near_[j - 2];
}

namespace {

Eigen::VectorXcd window(const SpectralField &v, int N) {
  if (v.frame() != Frame::InteractionV) {
    throw std::invalid_argument("modified energy: field must be in frame v");
  }
  Eigen::VectorXcd c(2 * N + 1);
  for (int n = -N; n <= N; ++n) {
    c[n + N] = v[n];
  }
  return c;
}

double hs_energy(const Eigen::VectorXcd &c, int N, double s) {
  double sum = 0.0;
  for (int n = -N; n <= N; ++n) {
    sum += std::pow(japanese_bracket(n), 2.0 * s) * std::norm(c[n + N]);
  }
  return 0.5 * sum;
}

} // namespace

EnergyBreakdown evaluate(const NormalForm &form, const SpectralField &v, double t) {
  const int N = form.truncation();
  const Eigen::VectorXcd c = window(v, N);
  EnergyBreakdown out;
  out.s = form.s();
  out.N = N;
  out.J_max = form.J_max();
  out.t = t;
  out.hs_energy = hs_energy(c, N, form.s());
  out.modified_energy = out.hs_energy;
  const Eigen::VectorXcd nonres = nonresonant_rhs(c, t, N);
  double rate = 0.0;
  for (int j = 2; j <= form.J_max() + 1; ++j) {
    const MultilinearForm &b = form.boundary(j);
    GenerationTerms g;
    g.j = j;
    g.N0 = b.value(c, t);
    g.R = -b.resonant_insertion(c, t);
    g.N1 = form.near(j).value(c, t);
    g.C0 = b.l1_norm();
    out.modified_energy -= g.N0;
    rate += g.R + g.N1;
    if (j == form.J_max() + 1) {
      out.remainder = -b.insertion(c, nonres, t) - g.N1;
    }
    out.terms.push_back(g);
  }
  out.derivative = rate + out.remainder;
  return out;
}

namespace {

void check_generation(int j) {
  if (j < 2) {
    throw std::invalid_argument("generation j must be >= 2");
  }
}

} // namespace

double eval_N0(const SpectralField &v, double t, int j, int N, double s,
               const EnergyOptions &options) {
  check_generation(j);
  NormalForm form(N, s, j - 1, options);
  return form.boundary(j).value(window(v, N), t);
}

double eval_N1(const SpectralField &v, double t, int j, int N, double s,
               const EnergyOptions &options) {
  check_generation(j);
  NormalForm form(N, s, j - 1, options);
  return form.near(j).value(window(v, N), t);
}

double eval_R(const SpectralField &v, double t, int j, int N, double s,
              const EnergyOptions &options) {
  check_generation(j);
  NormalForm form(N, s, j - 1, options);
  return -form.boundary(j).resonant_insertion(window(v, N), t);
}

double eval_N2(const SpectralField &v, double t, int j, int N, double s,
               const EnergyOptions &options) {
  check_generation(j);
  NormalForm form(N, s, j - 1, options);
  return evaluate(form, v, t).remainder;
}

EnergyBreakdown modified_energy(const SpectralField &v, double t, double s, int J_max,
                                int N, const EnergyOptions &options) {
  NormalForm form(N, s, J_max, options);
  return evaluate(form, v, t);
}

std::vector<double> central_difference_weights(int order) {
  switch (order) {
  case 2:
    return {-0.5, 0.0, 0.5};
  case 4:
    return {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  case 6:
    return {-1.0 / 60, 9.0 / 60, -45.0 / 60, 0.0, 45.0 / 60, -9.0 / 60, 1.0 / 60};
  default:
    throw std::invalid_argument("central_difference_weights: order must be 2, 4 or 6");
  }
}

namespace {

double uniform_spacing(const Trajectory &traj) {
  const std::size_t n = traj.size();
  const double h = traj[1].time() - traj[0].time();
  for (std::size_t k = 1; k < n; ++k) {
    const double hk = traj[k].time() - traj[k - 1].time();
    if (std::abs(hk - h) > 1e-9 * std::abs(h)) {
      throw std::invalid_argument("finite differences need equally spaced snapshots");
    }
  }
  return h;
}

} // namespace

std::vector<ResidualSample> telescoping_residual(const Trajectory &traj, double s,
                                                 int J, int N, int fd_order,
                                                 const EnergyOptions &options) {
  const auto weights = central_difference_weights(fd_order);
  const int half = static_cast<int>(weights.size()) / 2;
  if (traj.size() < weights.size()) {
    throw std::invalid_argument("telescoping_residual: too few snapshots for the stencil");
  }
  const double h = uniform_spacing(traj);
  NormalForm form(N, s, J, options);
  std::vector<EnergyBreakdown> rows;
  rows.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    rows.push_back(evaluate(form, traj[k], traj[k].time()));
  }
  std::vector<ResidualSample> out;
  for (std::size_t k = half; k + half < rows.size(); ++k) {
    double fd = 0.0;
    for (int q = -half; q <= half; ++q) {
      fd += weights[q + half] * rows[k + q].modified_energy;
    }
    fd /= h;
    const EnergyBreakdown &b = rows[k];
    double rate = 0.0;
    for (const auto &g : b.terms) {
      rate += g.N1 + g.R;
    }
    out.push_back({b.t, b.hs_energy, b.modified_energy, fd, fd - rate, b.remainder});
  }
  return out;
}

DriftReport energy_drift_bound(const Trajectory &traj, double s, int J_max, int N,
                               int fd_order, const EnergyOptions &options) {
  const auto weights = central_difference_weights(fd_order);
  const int half = static_cast<int>(weights.size()) / 2;
  if (traj.size() < weights.size()) {
    throw std::invalid_argument("energy_drift_bound: too few snapshots for the stencil");
  }
  const double h = uniform_spacing(traj);
  NormalForm form(N, s, J_max, options);
  std::vector<EnergyBreakdown> rows;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    rows.push_back(evaluate(form, traj[k], traj[k].time()));
  }
  DriftReport report;
  for (std::size_t k = half; k + half < rows.size(); ++k) {
    double dm = 0.0, du = 0.0;
    for (int q = -half; q <= half; ++q) {
      dm += weights[q + half] * rows[k + q].modified_energy;
      du += weights[q + half] * rows[k + q].hs_energy;
    }
    report.modified = std::max(report.modified, std::abs(dm / h));
    report.unmodified = std::max(report.unmodified, std::abs(du / h));
    report.assembled = std::max(report.assembled, std::abs(rows[k].derivative));
  }
  return report;
}

double density_weight(const SpectralField &v, double t, double r, double s, int J_max,
                      int N, const EnergyOptions &options) {
  if (std::sqrt(mass(v)) > r) {
    return 0.0;
  }
  const EnergyBreakdown b = modified_energy(v, t, s, J_max, N, options);
  double sum = 0.0;
  for (const auto &g : b.terms) {
    sum += g.N0;
  }
  return std::exp(sum);
}

double density_weight_bound(const NormalForm &form, double r) {
  double sum = 0.0;
  for (int j = 2; j <= form.J_max() + 1; ++j) {
    sum += form.boundary(j).l1_norm() * std::pow(r, 2 * j);
  }
  return std::exp(sum);
}

std::uint64_t divisor_count(std::uint64_t n) {
  if (n == 0) {
    throw std::invalid_argument("divisor_count: n must be >= 1");
  }
  std::uint64_t count = 0;
  for (std::uint64_t d = 1; d * d <= n; ++d) {
    if (n % d == 0) {
      count += (d * d == n) ? 1 : 2;
    }
  }
  return count;
}

double divisor_sum_diagnostic(double s, int N_cut) {
  if (!(s < 1.0)) {
    throw std::invalid_argument("divisor_sum_diagnostic: s must be < 1");
  }
  if (N_cut < 1) {
    throw std::invalid_argument("divisor_sum_diagnostic: N_cut must be >= 1");
  }
  // The sum at -n mirrors the sum at n, so n >= 0 suffices.
  double sup = 0.0;
  for (int n = 0; n <= N_cut; ++n) {
    double sum = 0.0;
    for (int n1 = -N_cut; n1 <= N_cut; ++n1) {
      if (n1 == n) {
        continue;
      }
      for (int n3 = -N_cut; n3 <= N_cut; ++n3) {
        const int n2 = n1 + n3 - n;
        if (n3 == n || n2 < -N_cut || n2 > N_cut) {
          continue;
        }
        const double a = n1, b = n2, c = n3, d = n;
        const double phi =
            (a - b) * (a - d) * (a * a + b * b + c * c + d * d + 2 * (a + c) * (a + c));
        sum += 1.0 / (phi * phi);
      }
    }
    sup = std::max(sup, std::pow(japanese_bracket(n), 4.0 * s) * sum);
  }
  return sup;
}

} // namespace nf4nls
