#include "nf4nls/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace nf4nls {

std::string_view scheme_tag(Scheme scheme) {
  switch (scheme) {
  case Scheme::IfRk4:
    return "if_rk4";
  case Scheme::Rk4Direct:
    return "rk4_direct";
  case Scheme::Conservative:
    return "conservative";
  }
  return "?";
}

Scheme parse_scheme(std::string_view tag) {
  if (tag == "if_rk4") {
    return Scheme::IfRk4;
  }
  if (tag == "rk4_direct") {
    return Scheme::Rk4Direct;
  }
  if (tag == "conservative") {
    return Scheme::Conservative;
  }
  throw std::invalid_argument("unknown scheme '" + std::string(tag) + "'");
}

void IntegratorConfig::validate() const {
  if (truncation < 0) {
    throw std::invalid_argument("IntegratorConfig: N must be >= 0");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("IntegratorConfig: dt must be positive");
  }
  if (!std::isfinite(t_final)) {
    throw std::invalid_argument("IntegratorConfig: t_final must be finite");
  }
  if (record_every < 1) {
    throw std::invalid_argument("IntegratorConfig: record_every must be >= 1");
  }
  if (!std::isfinite(coupling) || !std::isfinite(hs_index)) {
    throw std::invalid_argument("IntegratorConfig: non-finite parameter");
  }
}

namespace detail {

InteractionRhs::InteractionRhs(int truncation, double coupling)
    : truncation_(truncation), coupling_(coupling),
      cubic_(GridSpec::dealiased(truncation)) {}

void InteractionRhs::operator()(const Eigen::VectorXcd &v, double t,
                                Eigen::VectorXcd &out) {
  phases_ = dispersion_phases(truncation_, t, -1);
  w_ = v.cwiseProduct(phases_);
  const double m = w_.squaredNorm();
  const Eigen::VectorXcd &cubic = cubic_(w_);
  const Complex i{0.0, 1.0};
  // e^{+i n^4 t} (-i |w|^2 w + 2 i m w); the second piece is 2 i m v.
  out.resize(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out[k] = coupling_ *
             (-i * cubic[k] * std::conj(phases_[k]) + 2.0 * i * m * v[k]);
  }
}

} // namespace detail

SpectralField rhs_interaction(const SpectralField &v, double t) {
  if (v.frame() != Frame::InteractionV) {
    throw std::invalid_argument("rhs_interaction: field must be in frame v");
  }
  detail::InteractionRhs rhs(v.truncation());
  Eigen::VectorXcd out;
  rhs(v.coeffs(), t, out);
  return SpectralField(Frame::InteractionV, v.truncation(), std::move(out), t);
}

Eigen::VectorXcd nonresonant_rhs(const Eigen::VectorXcd &v, double t,
                                 int truncation) {
  detail::InteractionRhs rhs(truncation);
  Eigen::VectorXcd out;
  rhs(v, t, out);
  const Complex i{0.0, 1.0};
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out[k] -= i * std::norm(v[k]) * v[k];
  }
  return out;
}

SpectralField rhs_direct_oracle(const SpectralField &v, double t,
                                int truncation) {
  const int N = v.truncation();
  const int K = std::min(N, truncation);
  const Complex i{0.0, 1.0};
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(2 * N + 1);
  for (int n = -K; n <= K; ++n) {
    Complex acc{0.0, 0.0};
    for (int n1 = -K; n1 <= K; ++n1) {
      if (n1 == n) {
        continue;
      }
      for (int n3 = -K; n3 <= K; ++n3) {
        if (n3 == n) {
          continue;
        }
        const int n2 = n1 + n3 - n;
        if (n2 < -K || n2 > K) {
          continue;
        }
        const PhaseInt phi = phase_phi(PhaseTuple(n1, n2, n3, n));
        acc += std::polar(1.0, -to_double(phi) * t) * v[n1] *
               std::conj(v[n2]) * v[n3];
      }
    }
    const Complex vn = v[n];
    out[n + N] = -i * acc + i * std::norm(vn) * vn;
  }
  return SpectralField(v.frame(), N, std::move(out), t);
}

SpectralField rhs_direct_oracle(const SpectralField &v, double t) {
  return rhs_direct_oracle(v, t, v.truncation());
}

namespace {

class Stepper {
public:
  explicit Stepper(const IntegratorConfig &config)
      : config_(config), rhs_(config.truncation, config.coupling),
        cubic_(GridSpec::dealiased(config.truncation)) {}

  // Advances v (interaction frame) from t to t + dt in place.
  void advance(Eigen::VectorXcd &v, double t, double dt) {
    if (config_.scheme == Scheme::IfRk4) {
      rk4(v, t, dt, [this](const Eigen::VectorXcd &x, double s,
                           Eigen::VectorXcd &out) { rhs_(x, s, out); });
      return;
    }
    const int N = config_.truncation;
    Eigen::VectorXcd w =
        v.cwiseProduct(detail::dispersion_phases(N, t, -1));
    if (config_.scheme == Scheme::Conservative) {
      averaged_step(w, dt);
    } else {
      rk4(w, t, dt,
          [this, N](const Eigen::VectorXcd &x, double, Eigen::VectorXcd &out) {
            renormalized_rhs(x, N, out);
          });
    }
    v = w.cwiseProduct(detail::dispersion_phases(N, t + dt, +1));
  }

  // Solves
  //   i (u1 - u0)/dt = L (u1 + u0)/2
  //                  + lambda P_N[((|u1|^2 + |u0|^2)/2 - 2m)(u1 + u0)/2]
  // by fixed-point iteration on the nonlinear part.
  void averaged_step(Eigen::VectorXcd &u, double dt) {
    const int N = config_.truncation;
    const Complex i{0.0, 1.0};
    const double m = u.squaredNorm();
    const Eigen::Index size = u.size();
    Eigen::VectorXcd plus(size), minus(size);
    for (int n = -N; n <= N; ++n) {
      const double n2 = double(n) * n;
      const Complex a = 0.5 * i * dt * n2 * n2;
      plus[n + N] = 1.0 + a;
      minus[n + N] = 1.0 - a;
    }
    const Eigen::VectorXcd u0 = u;
    const Eigen::VectorXd sq0 = cubic_.synthesize(u0).cwiseAbs2();
    Eigen::VectorXcd u1 = u0;
    Eigen::VectorXcd mid(size), rhs(size);
    for (int iter = 0; iter < 100; ++iter) {
      mid = 0.5 * (u0 + u1);
      const Eigen::VectorXd sq1 = cubic_.synthesize(u1).cwiseAbs2();
      Eigen::VectorXcd vals = cubic_.synthesize(mid);
      for (Eigen::Index k = 0; k < vals.size(); ++k) {
        vals[k] *= 0.5 * (sq0[k] + sq1[k]);
      }
      const Eigen::VectorXcd nl = from_physical(vals, N);
      for (Eigen::Index k = 0; k < size; ++k) {
        rhs[k] = (minus[k] * u0[k] -
                  i * dt * config_.coupling * (nl[k] - 2.0 * m * mid[k])) /
                 plus[k];
      }
      const double change = (rhs - u1).norm();
      u1 = rhs;
      if (change <= 1e-15 * std::max(1.0, u1.norm())) {
        u = u1;
        return;
      }
    }
    throw IntegrationError(-1, "conservative step: fixed point did not converge");
  }

private:
  template <class F>
  void rk4(Eigen::VectorXcd &y, double t, double dt, F &&f) {
    f(y, t, k1_);
    tmp_ = y + (0.5 * dt) * k1_;
    f(tmp_, t + 0.5 * dt, k2_);
    tmp_ = y + (0.5 * dt) * k2_;
    f(tmp_, t + 0.5 * dt, k3_);
    tmp_ = y + dt * k3_;
    f(tmp_, t + dt, k4_);
    y += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

  // i u_t = u_xxxx + lambda (|u|^2 - 2 M(u)) u
  void renormalized_rhs(const Eigen::VectorXcd &u, int N,
                        Eigen::VectorXcd &out) {
    const Complex i{0.0, 1.0};
    const double m = u.squaredNorm();
    const Eigen::VectorXcd &cubic = cubic_(u);
    out.resize(u.size());
    for (int n = -N; n <= N; ++n) {
      const double n2 = double(n) * n;
      const Eigen::Index k = n + N;
      out[k] = -i * (n2 * n2 * u[k] +
                     config_.coupling * (cubic[k] - 2.0 * m * u[k]));
    }
  }

  const IntegratorConfig &config_;
  detail::InteractionRhs rhs_;
  detail::CubicProduct cubic_;
  Eigen::VectorXcd k1_, k2_, k3_, k4_, tmp_;
};

Diagnostics diagnose(const SpectralField &v, const IntegratorConfig &config) {
  const SpectralField u = reconstruct_u(v, config.coupling);
  return {v.time(), mass(v), hamiltonian(u), sobolev_norm(v, config.hs_index)};
}

} // namespace

SpectralField step(const SpectralField &v, double t, double dt,
                   const IntegratorConfig &config) {
  if (v.frame() != Frame::InteractionV) {
    throw std::invalid_argument("step: field must be in frame v");
  }
  if (dt == 0.0) {
    return v;
  }
  IntegratorConfig cfg = config;
  cfg.truncation = v.truncation();
  Stepper stepper(cfg);
  Eigen::VectorXcd c = v.coeffs();
  stepper.advance(c, t, dt);
  return SpectralField(Frame::InteractionV, v.truncation(), std::move(c),
                       t + dt);
}

Trajectory integrate(const SpectralField &v0, const IntegratorConfig &config) {
  config.validate();
  if (v0.frame() != Frame::InteractionV) {
    throw std::invalid_argument("integrate: initial data must be in frame v");
  }
  if (v0.truncation() != config.truncation) {
    throw std::invalid_argument("integrate: initial data N differs from config N");
  }
  const double t0 = v0.time();
  const double span = config.t_final - t0;
  const long steps = std::lround(std::abs(span) / config.dt);
  if (std::abs(steps * config.dt - std::abs(span)) >
      1e-9 * std::max(1.0, std::abs(span))) {
    throw std::invalid_argument(
        "integrate: |t_final - t0| is not a whole number of steps");
  }
  const double dt = span >= 0 ? config.dt : -config.dt;

  Trajectory traj;
  traj.config = config;
  if (config.dt * mass(v0) > 0.1) {
    std::ostringstream msg;
    msg << "dt * mass = " << config.dt * mass(v0) << " exceeds 0.1";
    traj.warnings.push_back(msg.str());
  }
  traj.snapshots.push_back(v0);
  traj.diagnostics.push_back(diagnose(v0, config));

  Stepper stepper(config);
  Eigen::VectorXcd v = v0.coeffs();
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + double(k) * dt;
    stepper.advance(v, t, dt);
    if (!v.allFinite()) {
      throw IntegrationError(k + 1, "integrate: non-finite state at step " +
                                        std::to_string(k + 1));
    }
    if ((k + 1) % config.record_every == 0 || k + 1 == steps) {
      SpectralField snap(Frame::InteractionV, config.truncation, v,
                         t0 + double(k + 1) * dt);
      traj.diagnostics.push_back(diagnose(snap, config));
      traj.snapshots.push_back(std::move(snap));
    }
  }
  return traj;
}

SpectralField reconstruct_u(const SpectralField &v, double coupling) {
  const double t = v.time();
  const int N = v.truncation();
  const double m = mass(v);
  Eigen::VectorXcd c = v.coeffs().cwiseProduct(detail::dispersion_phases(N, t, -1));
  c *= std::polar(1.0, -2.0 * coupling * t * m);
  return SpectralField(Frame::PhysicalU, N, std::move(c), t);
}

std::vector<SpectralField> reconstruct_u(const Trajectory &traj) {
  std::vector<SpectralField> out;
  out.reserve(traj.size());
  for (const auto &v : traj.snapshots) {
    out.push_back(reconstruct_u(v, traj.config.coupling));
  }
  return out;
}

} // namespace nf4nls
