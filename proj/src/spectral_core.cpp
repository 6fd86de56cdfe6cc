#include "nf4nls/spectral_core.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nf4nls {

std::string to_string(PhaseInt value) {
  if (value == 0) {
    return "0";
  }
  const bool negative = value < 0;
  // Work with a non-positive accumulator so INT128_MIN would not overflow.
  PhaseInt rest = negative ? value : -value;
  std::string digits;
  while (rest != 0) {
    digits.push_back(static_cast<char>('0' - static_cast<int>(rest % 10)));
    rest /= 10;
  }
  if (negative) {
    digits.push_back('-');
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

std::string_view frame_tag(Frame frame) {
  switch (frame) {
  case Frame::PhysicalU:
    return "u";
  case Frame::RenormalizedU:
    return "u_tilde";
  case Frame::InteractionV:
    return "v";
  }
  return "?";
}

Frame parse_frame(std::string_view tag) {
  if (tag == "u") {
    return Frame::PhysicalU;
  }
  if (tag == "u_tilde") {
    return Frame::RenormalizedU;
  }
  if (tag == "v") {
    return Frame::InteractionV;
  }
  throw std::invalid_argument("unknown frame tag '" + std::string(tag) + "'");
}

SpectralField::SpectralField(Frame frame, int truncation,
                             Eigen::VectorXcd coeffs, double time)
    : frame_(frame), truncation_(truncation), coeffs_(std::move(coeffs)),
      time_(time) {
  if (truncation < 0) {
    throw std::invalid_argument("SpectralField: negative truncation");
  }
  if (coeffs_.size() != 2 * static_cast<Eigen::Index>(truncation) + 1) {
    throw std::invalid_argument("SpectralField: expected 2N+1 coefficients");
  }
  if (!coeffs_.allFinite()) {
    throw std::invalid_argument("SpectralField: non-finite coefficient");
  }
  if (!std::isfinite(time)) {
    throw std::invalid_argument("SpectralField: non-finite time");
  }
}

SpectralField SpectralField::zeros(Frame frame, int truncation, double time) {
  return SpectralField(frame, truncation,
                       Eigen::VectorXcd::Zero(2 * truncation + 1), time);
}

Complex SpectralField::operator[](Freq n) const {
  if (n < -truncation_ || n > truncation_) {
    return {0.0, 0.0};
  }
  return coeffs_[static_cast<Eigen::Index>(n + truncation_)];
}

SpectralField SpectralField::with_coeffs(Eigen::VectorXcd coeffs) const {
  return SpectralField(frame_, truncation_, std::move(coeffs), time_);
}

SpectralField SpectralField::with_mode(Freq n, Complex value) const {
  if (n < -truncation_ || n > truncation_) {
    throw std::out_of_range("SpectralField::with_mode: |n| > N");
  }
  Eigen::VectorXcd c = coeffs_;
  c[static_cast<Eigen::Index>(n + truncation_)] = value;
  return with_coeffs(std::move(c));
}

SpectralField SpectralField::at_time(double time) const {
  return SpectralField(frame_, truncation_, coeffs_, time);
}

GridSpec::GridSpec(int truncation_, int points_)
    : truncation(truncation_), points(points_) {
  if (truncation < 0) {
    throw std::invalid_argument("GridSpec: negative truncation");
  }
  if (points < 3 * (2 * truncation + 1)) {
    throw std::invalid_argument("GridSpec: need M >= 3(2N+1) for dealiasing");
  }
}

GridSpec GridSpec::dealiased(int truncation) {
  int m = 1;
  while (m < 3 * (2 * truncation + 1)) {
    m *= 2;
  }
  return GridSpec(truncation, m);
}

double GridSpec::x(int m) const { return 2.0 * M_PI * m / points; }

PhaseTuple::PhaseTuple(Freq n1_, Freq n2_, Freq n3_, Freq n_)
    : n1(n1_), n2(n2_), n3(n3_), n(n_) {
  if (n != n1 - n2 + n3) {
    throw std::invalid_argument("PhaseTuple: n != n1 - n2 + n3");
  }
  for (Freq k : {n1, n2, n3, n}) {
    if (k > kMaxPhaseFrequency || k < -kMaxPhaseFrequency) {
      throw std::out_of_range("PhaseTuple: |n_i| exceeds 2^20");
    }
  }
}

double japanese_bracket(double n) { return std::sqrt(1.0 + n * n); }

double sobolev_norm(const SpectralField &f, double sigma) {
  const int N = f.truncation();
  double sum = 0.0;
  for (int n = -N; n <= N; ++n) {
    const double w = sigma == 0.0 ? 1.0 : std::pow(1.0 + double(n) * n, sigma);
    sum += w * std::norm(f.coeffs()[n + N]);
  }
  return std::sqrt(sum);
}

double mass(const Eigen::VectorXcd &coeffs) { return coeffs.squaredNorm(); }

double mass(const SpectralField &f) { return mass(f.coeffs()); }

double hamiltonian(const SpectralField &f, const GridSpec &grid) {
  if (f.frame() != Frame::PhysicalU) {
    throw std::invalid_argument("hamiltonian: field must be in frame u");
  }
  const int N = f.truncation();
  double kinetic = 0.0;
  for (int n = -N; n <= N; ++n) {
    const double n2 = double(n) * n;
    kinetic += n2 * n2 * std::norm(f.coeffs()[n + N]);
  }
  const Eigen::VectorXcd u = to_physical(f, grid);
  double quartic = 0.0;
  for (Eigen::Index m = 0; m < u.size(); ++m) {
    const double a = std::norm(u[m]);
    quartic += a * a;
  }
  quartic /= grid.points;
  return 0.5 * kinetic + 0.25 * quartic;
}

double hamiltonian(const SpectralField &f) {
  return hamiltonian(f, GridSpec::dealiased(f.truncation()));
}

namespace {

PhaseInt fourth(Freq k) {
  const PhaseInt q = static_cast<PhaseInt>(k) * k;
  return q * q;
}

} // namespace

PhaseInt phase_phi(const PhaseTuple &p) {
  return fourth(p.n1) - fourth(p.n2) + fourth(p.n3) - fourth(p.n);
}

PhaseInt phase_phi_factored(const PhaseTuple &p) {
  const PhaseInt a = p.n1, b = p.n2, c = p.n3, d = p.n;
  const PhaseInt s = a + c;
  return (a - b) * (a - d) * (a * a + b * b + c * c + d * d + 2 * s * s);
}

PhaseInt phase_mu(const PhaseTuple &p) {
  return PhaseInt{-2} * (PhaseInt{p.n} - p.n1) * (PhaseInt{p.n} - p.n3);
}

namespace detail {

Eigen::VectorXcd dispersion_phases(int truncation, double t, double sign) {
  Eigen::VectorXcd out(2 * truncation + 1);
  for (int n = -truncation; n <= truncation; ++n) {
    const double n2 = double(n) * n;
    out[n + truncation] = std::polar(1.0, sign * n2 * n2 * t);
  }
  return out;
}

} // namespace detail

SpectralField linear_propagate(const SpectralField &f, double dt) {
  if (dt == 0.0) {
    return f;
  }
  Eigen::VectorXcd c =
      f.coeffs().cwiseProduct(detail::dispersion_phases(f.truncation(), dt, -1));
  return SpectralField(f.frame(), f.truncation(), std::move(c), f.time() + dt);
}

SpectralField gauge(const SpectralField &f, double t) {
  if (t == 0.0) {
    return f;
  }
  const Complex rot = std::polar(1.0, 2.0 * t * mass(f));
  return f.with_coeffs(f.coeffs() * rot);
}

namespace {

// Accumulate c_n into bin n mod M; exact for any M.
void scatter_modes(const Eigen::VectorXcd &coeffs, int truncation, int points,
                   std::vector<Complex> &bins) {
  bins.assign(static_cast<std::size_t>(points), Complex{});
  for (int n = -truncation; n <= truncation; ++n) {
    int k = n % points;
    if (k < 0) {
      k += points;
    }
    bins[static_cast<std::size_t>(k)] += coeffs[n + truncation];
  }
}

} // namespace

Eigen::VectorXcd to_physical(const SpectralField &f, const GridSpec &grid) {
  if (grid.truncation != f.truncation()) {
    throw std::invalid_argument("to_physical: grid N does not match field N");
  }
  std::vector<Complex> bins;
  scatter_modes(f.coeffs(), f.truncation(), grid.points, bins);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> out;
  fft.inv(out, bins);
  return Eigen::Map<Eigen::VectorXcd>(out.data(), grid.points);
}

Eigen::VectorXcd from_physical(const Eigen::VectorXcd &values, int truncation) {
  const auto points = static_cast<int>(values.size());
  if (points < 2 * truncation + 1) {
    throw std::invalid_argument("from_physical: grid too coarse for N");
  }
  std::vector<Complex> in(values.data(), values.data() + points);
  std::vector<Complex> spec;
  Eigen::FFT<double> fft;
  fft.fwd(spec, in);
  Eigen::VectorXcd c(2 * truncation + 1);
  for (int n = -truncation; n <= truncation; ++n) {
    int k = n % points;
    if (k < 0) {
      k += points;
    }
    c[n + truncation] = spec[static_cast<std::size_t>(k)] / double(points);
  }
  return c;
}

SpectralField convert_frame(const SpectralField &f, Frame target) {
  const double t = f.time();
  const int N = f.truncation();
  // Rank frames along u -> u~ -> v and walk one step at a time.
  auto rank = [](Frame fr) {
    switch (fr) {
    case Frame::PhysicalU:
      return 0;
    case Frame::RenormalizedU:
      return 1;
    case Frame::InteractionV:
      return 2;
    }
    return 0;
  };
  Eigen::VectorXcd c = f.coeffs();
  const double m = mass(c);
  int at = rank(f.frame());
  const int goal = rank(target);
  while (at != goal) {
    if (at == 0 && goal > 0) {
      c *= std::polar(1.0, 2.0 * t * m);
      at = 1;
    } else if (at == 1 && goal == 2) {
      c = c.cwiseProduct(detail::dispersion_phases(N, t, +1));
      at = 2;
    } else if (at == 2) {
      c = c.cwiseProduct(detail::dispersion_phases(N, t, -1));
      at = 1;
    } else {
      c *= std::polar(1.0, -2.0 * t * m);
      at = 0;
    }
  }
  return SpectralField(target, N, std::move(c), t);
}

void write_field_csv(std::ostream &out, const SpectralField &f) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "# frame=" << frame_tag(f.frame()) << " N=" << f.truncation()
      << " t=" << f.time() << "\n";
  buf << "n,re,im\n";
  const int N = f.truncation();
  for (int n = -N; n <= N; ++n) {
    const Complex c = f.coeffs()[n + N];
    buf << n << "," << c.real() << "," << c.imag() << "\n";
  }
  out << buf.str();
}

SpectralField read_field_csv(std::istream &in) {
  std::string line;
  Frame frame = Frame::PhysicalU;
  int N = -1;
  double t = 0.0;
  bool have_header = false;
  std::vector<std::pair<long, Complex>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) {
          continue;
        }
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "frame") {
          frame = parse_frame(val);
          have_header = true;
        } else if (key == "N") {
          N = std::stoi(val);
        } else if (key == "t") {
          t = std::stod(val);
        }
      }
      continue;
    }
    if (line.rfind("n,", 0) == 0) {
      continue;
    }
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') ||
        !std::getline(ls, c)) {
      throw std::runtime_error("read_field_csv: malformed row '" + line + "'");
    }
    rows.emplace_back(std::stol(a), Complex(std::stod(b), std::stod(c)));
  }
  if (!have_header || N < 0) {
    throw std::runtime_error("read_field_csv: missing '# frame=... N=...' header");
  }
  Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(2 * N + 1);
  for (const auto &[n, value] : rows) {
    if (n < -N || n > N) {
      throw std::runtime_error("read_field_csv: mode outside |n| <= N");
    }
    coeffs[n + N] = value;
  }
  return SpectralField(frame, N, std::move(coeffs), t);
}

namespace detail {

struct CubicProduct::Impl {
  Eigen::FFT<double> fft;
  std::vector<Complex> bins;
  std::vector<Complex> grid;
  std::vector<Complex> spec;
};

CubicProduct::CubicProduct(const GridSpec &grid)
    : grid_(grid), impl_(std::make_shared<Impl>()) {
  impl_->fft.SetFlag(Eigen::FFT<double>::Unscaled);
  result_.resize(2 * grid.truncation + 1);
  values_.resize(grid.points);
}

const Eigen::VectorXcd &CubicProduct::synthesize(const Eigen::VectorXcd &w) {
  scatter_modes(w, grid_.truncation, grid_.points, impl_->bins);
  impl_->fft.inv(impl_->grid, impl_->bins);
  values_ = Eigen::Map<Eigen::VectorXcd>(impl_->grid.data(), grid_.points);
  return values_;
}

const Eigen::VectorXcd &CubicProduct::operator()(const Eigen::VectorXcd &w) {
  const int N = grid_.truncation;
  const int M = grid_.points;
  scatter_modes(w, N, M, impl_->bins);
  impl_->fft.inv(impl_->grid, impl_->bins);
  for (auto &z : impl_->grid) {
    z *= std::norm(z);
  }
  impl_->fft.fwd(impl_->spec, impl_->grid);
  for (int n = -N; n <= N; ++n) {
    int k = n % M;
    if (k < 0) {
      k += M;
    }
    result_[n + N] = impl_->spec[static_cast<std::size_t>(k)] / double(M);
  }
  return result_;
}

} // namespace detail

} // namespace nf4nls
