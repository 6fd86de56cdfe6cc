#include "nf4nls/cli_harness.hpp"

#include "nf4nls/bitrees.hpp"
#include "nf4nls/modified_energy.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

namespace nf4nls {

namespace fs = std::filesystem;

std::string_view initial_data_tag(InitialData d) {
  switch (d) {
  case InitialData::Random:
    return "random";
  case InitialData::SingleMode:
    return "single";
  case InitialData::Zero:
    return "zero";
  }
  return "random";
}

InitialData parse_initial_data(std::string_view tag) {
  if (tag == "random") {
    return InitialData::Random;
  }
  if (tag == "single") {
    return InitialData::SingleMode;
  }
  if (tag == "zero") {
    return InitialData::Zero;
  }
  throw std::invalid_argument("unknown initial data '" + std::string(tag) + "'");
}

namespace {

std::string str(int v) { return std::to_string(v); }
std::string str(std::uint64_t v) { return std::to_string(v); }
std::string str(double v) { return format_real(v); }

std::string join(const std::vector<int> &xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += (i ? " " : "") + std::to_string(xs[i]);
  }
  return out;
}

void require(bool ok, const std::string &message) {
  if (!ok) {
    throw std::invalid_argument(message);
  }
}

} // namespace

ConfigEcho ExperimentConfig::echo() const {
  return {
      {"N", str(N)},
      {"dt", str(dt)},
      {"t_final", str(t_final)},
      {"scheme", std::string(scheme_tag(scheme))},
      {"record_every", str(record_every)},
      {"data", std::string(initial_data_tag(data))},
      {"mass", str(mass)},
      {"s", str(s)},
      {"J_max", str(J_max)},
      {"fd_order", str(fd_order)},
      {"n_sweep", join(n_sweep)},
      {"seed", str(seed)},
      {"samples", str(samples)},
      {"N_samp", str(N_samp)},
      {"k_min", str(k_min)},
      {"k_max", str(k_max)},
      {"x0", str(x0)},
      {"normalizer", std::string(normalizer_tag(normalizer))},
      {"k_branch", str(k_branch)},
      {"eps", str(eps)},
      {"max_draws", str(max_draws)},
      {"baseline", str(baseline)},
      {"inject_parity_error", inject_parity_error ? "true" : "false"},
      {"quick", quick ? "true" : "false"},
      {"budget", str(enumeration_budget())},
  };
}

void ExperimentConfig::validate() const {
  const bool dyn = command == "simulate" || command == "energy";
  if (dyn) {
    require(N >= 1 && N <= 4096, "--n must be in [1, 4096]");
    require(dt > 0.0 && std::isfinite(dt), "--dt must be positive");
    require(std::isfinite(t_final), "--t-final must be finite");
    require(record_every >= 1, "--record-every must be >= 1");
    require(mass >= 0.0 && std::isfinite(mass), "--mass must be >= 0");
  }
  if (command == "energy" || command == "sample" || command == "lil") {
    require(s > 0.5, "--s must exceed 1/2");
  }
  if (command == "simulate") {
    require(s >= 0.0, "--s must be >= 0");
  }
  if (command == "energy") {
    require(J_max >= 1 && J_max <= kMaxChronicleLength - 1,
            "--jmax must be in [1, " + std::to_string(kMaxChronicleLength - 1) + "]");
    require(fd_order == 2 || fd_order == 4 || fd_order == 6, "--fd-order must be 2, 4 or 6");
    require(!n_sweep.empty(), "--n-sweep must not be empty");
    for (int n : n_sweep) {
      require(n >= 1 && n <= 64, "--n-sweep entries must be in [1, 64]");
    }
    require(samples >= 1, "--samples must be >= 1");
  }
  if (command == "bitree") {
    require(J_max >= 1, "--jmax must be >= 1");
  }
  if (command == "sample") {
    require(samples >= 1, "--samples must be >= 1");
    require(N_samp >= 1, "--n-samp must be >= 1");
    require(k_min >= 1 && k_min <= k_max, "need 1 <= --k-min <= --k-max");
  }
  if (command == "lil") {
    LILExperimentConfig lil;
    lil.s = s;
    lil.t = t_final;
    lil.k_branch = k_branch;
    lil.eps = eps;
    lil.max_draws = max_draws;
    lil.target_conditioned = samples;
    lil.baseline = baseline;
    lil.N_samp = N_samp;
    lil.k_min = k_min;
    lil.k_max = k_max;
    lil.validate();
  }
}

SpectralField initial_field(InitialData kind, int N, double s, double target_mass,
                            std::uint64_t seed, std::uint64_t index) {
  if (kind == InitialData::Zero || target_mass == 0.0) {
    return SpectralField::zeros(Frame::InteractionV, N);
  }
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(2 * N + 1);
  if (kind == InitialData::SingleMode) {
    c[N + std::min(N, 1)] = std::sqrt(target_mass);
  } else {
    c = MuSampler(s, N).draw(seed, index).coeffs;
    c *= std::sqrt(target_mass) / c.norm();
  }
  return SpectralField(Frame::InteractionV, N, std::move(c), 0.0);
}

namespace {

IntegratorConfig integrator(const ExperimentConfig &c, int N) {
  IntegratorConfig ic;
  ic.truncation = N;
  ic.dt = c.dt;
  ic.t_final = c.t_final;
  ic.scheme = c.scheme;
  ic.record_every = c.record_every;
  ic.hs_index = c.s;
  return ic;
}

EnergyOptions energy_options(const ExperimentConfig &c) {
  EnergyOptions o;
  o.parity = c.inject_parity_error ? ParityRule::Broken : ParityRule::Signed;
  return o;
}

void emit(const ExperimentConfig &c, const std::string &name, const CsvDocument &doc,
          std::ostream &log) {
  const fs::path path = c.out / name;
  write_atomic(path, doc.text());
  log << "wrote " << path.string() << "\n";
}

} // namespace

int cmd_simulate(const ExperimentConfig &config, std::ostream &log) {
  const SpectralField v0 =
      initial_field(config.data, config.N, config.s, config.mass, config.seed);
  const Trajectory traj = integrate(v0, integrator(config, config.N));
  for (const auto &w : traj.warnings) {
    log << "warning: " << w << "\n";
  }
  const std::vector<SpectralField> u = reconstruct_u(traj);

  CsvDocument coeffs("simulate", config.echo());
  coeffs.header({"t", "n", "re", "im", "re_u", "im_u"});
  for (std::size_t i = 0; i < traj.size(); ++i) {
    for (int n = -config.N; n <= config.N; ++n) {
      const Complex a = traj[i][n], b = u[i][n];
      coeffs.row({str(traj[i].time()), str(n), str(a.real()), str(a.imag()),
                  str(b.real()), str(b.imag())});
    }
  }

  CsvDocument diag("simulate", config.echo());
  diag.header({"t", "mass", "hamiltonian", "hs_norm", "mass_drift", "hamiltonian_drift"});
  const Diagnostics &d0 = traj.diagnostics.front();
  for (const Diagnostics &d : traj.diagnostics) {
    const double dh = d0.hamiltonian != 0.0
                          ? (d.hamiltonian - d0.hamiltonian) / std::abs(d0.hamiltonian)
                          : d.hamiltonian - d0.hamiltonian;
    diag.row({str(d.time), str(d.mass), str(d.hamiltonian), str(d.hs_norm),
              str(d.mass - d0.mass), str(dh)});
  }
  emit(config, "simulate_trajectory.csv", coeffs, log);
  emit(config, "simulate_diagnostics.csv", diag, log);
  return 0;
}

int cmd_energy(const ExperimentConfig &config, std::ostream &log) {
  const EnergyOptions opts = energy_options(config);
  const SpectralField v0 =
      initial_field(config.data, config.N, config.s, config.mass, config.seed);
  const Trajectory traj = integrate(v0, integrator(config, config.N));
  if (traj.size() <= static_cast<std::size_t>(config.fd_order)) {
    log << "error: " << traj.size() << " snapshots are too few for the order "
        << config.fd_order << " stencil\n";
    return 2;
  }

  // Per-generation terms of the initial datum.
  CsvDocument breakdown("energy", config.echo());
  const EnergyBreakdown e0 = modified_energy(v0, v0.time(), config.s, config.J_max,
                                             config.N, opts);
  breakdown.comment("hs_energy = " + format_real(e0.hs_energy) +
                    ", modified_energy = " + format_real(e0.modified_energy) +
                    ", remainder = " + format_real(e0.remainder));
  breakdown.header({"j", "N0", "N1", "R", "C0"});
  for (const GenerationTerms &g : e0.terms) {
    breakdown.row({str(g.j), str(g.N0), str(g.N1), str(g.R), str(g.C0)});
  }

  // Telescoping residual along the trajectory at J_max.
  CsvDocument drift("energy", config.echo());
  drift.header({"t", "hs_energy", "modified_energy", "residual", "remainder"});
  for (const ResidualSample &r :
       telescoping_residual(traj, config.s, config.J_max, config.N, config.fd_order, opts)) {
    drift.row({str(r.t), str(r.hs_energy), str(r.modified_energy), str(r.residual),
               str(r.remainder)});
  }

  // The same residual for every depth up to J_max.
  CsvDocument by_depth("energy", config.echo());
  by_depth.header({"J", "max_abs_residual", "max_abs_remainder", "max_abs_gap"});
  for (int J = 1; J <= config.J_max; ++J) {
    double res = 0, rem = 0, gap = 0;
    for (const ResidualSample &r :
         telescoping_residual(traj, config.s, J, config.N, config.fd_order, opts)) {
      res = std::max(res, std::abs(r.residual));
      rem = std::max(rem, std::abs(r.remainder));
      gap = std::max(gap, std::abs(r.residual - r.remainder));
    }
    by_depth.row({str(J), str(res), str(rem), str(gap)});
  }

  // max_t |d/dt| of both energies across truncations.
  CsvDocument sweep("energy", config.echo());
  sweep.header({"sample", "N", "modified", "unmodified", "assembled"});
  for (int i = 0; i < config.samples; ++i) {
    for (int N : config.n_sweep) {
      const SpectralField w0 = initial_field(config.data, N, config.s, config.mass,
                                             config.seed, static_cast<std::uint64_t>(i));
      const DriftReport d = energy_drift_bound(integrate(w0, integrator(config, N)),
                                               config.s, config.J_max, N,
                                               config.fd_order, opts);
      sweep.row({str(i), str(N), str(d.modified), str(d.unmodified), str(d.assembled)});
    }
  }
  emit(config, "energy_breakdown.csv", breakdown, log);
  emit(config, "energy_drift.csv", drift, log);
  emit(config, "energy_residual_by_J.csv", by_depth, log);
  emit(config, "energy_sweep.csv", sweep, log);
  return 0;
}

int cmd_bitree(const ExperimentConfig &config, std::ostream &log) {
  if (config.J_max > kMaxChronicleLength) {
    log << "error: J = " << config.J_max << " exceeds the enumeration cap of "
        << kMaxChronicleLength << "\n";
    return 2;
  }
  CsvDocument counts("bitree", config.echo());
  counts.header({"J", "formula", "enumerated"});
  for (int J = 1; J <= config.J_max; ++J) {
    const std::uint64_t formula = count_ordered_bitrees(J);
    const std::size_t enumerated = enumerate_ordered_bitrees(J).size();
    counts.row({str(J), str(formula), str(static_cast<std::uint64_t>(enumerated))});
    log << "J = " << J << ": " << enumerated << "\n";
  }
  std::ostringstream dump;
  dump_all_bitrees(dump, config.J_max);
  CsvDocument trees("bitree", config.echo());
  trees.comment("node lines: id, parent, slot, parity, gen");
  emit(config, "bitree_counts.csv", counts, log);
  write_atomic(config.out / "bitree_dump.txt", trees.text() + dump.str());
  log << "wrote " << (config.out / "bitree_dump.txt").string() << "\n";
  return 0;
}

int cmd_lil(const ExperimentConfig &config, std::ostream &log) {
  LILExperimentConfig lil;
  lil.s = config.s;
  lil.t = config.t_final;
  lil.k_branch = config.k_branch;
  lil.eps = config.eps;
  lil.max_draws = config.max_draws;
  lil.target_conditioned = config.samples;
  lil.baseline = config.baseline;
  lil.seed = config.seed;
  lil.N_samp = config.N_samp;
  lil.k_min = config.k_min;
  lil.k_max = config.k_max;
  lil.x0 = config.x0;
  lil.normalizer = config.normalizer;
  const LILExperimentReport r = lil_breakdown_experiment(lil);

  CsvDocument rows("lil", config.echo());
  rows.comment("M^2 = " + format_real(lil.M() * lil.M()) +
               ", tail_variance = " + format_real(tail_variance(lil.s, lil.N_samp)));
  rows.header({"sample", "conditioned", "pre_ratio_max", "post_ratio_max"});
  for (const LILSampleRow &row : r.rows) {
    rows.row({str(row.sample), row.conditioned ? "1" : "0", str(row.pre_ratio_max),
              str(row.post_ratio_max)});
  }
  CsvDocument summary("lil", config.echo());
  summary.header({"draws", "conditioned", "median_pre", "median_post", "exceed_fraction",
                  "baseline_exceed_fraction", "rank_u", "rank_z", "p_value"});
  summary.row({str(r.draws), str(r.conditioned), str(r.median_pre), str(r.median_post),
               str(r.exceed_fraction), str(r.baseline_exceed_fraction), str(r.rank.u),
               str(r.rank.z), str(r.rank.p_value)});
  log << "conditioned " << r.conditioned << " of " << r.draws << " draws, p = "
      << format_real(r.rank.p_value) << "\n";
  emit(config, "lil.csv", rows, log);
  emit(config, "lil_summary.csv", summary, log);
  return 0;
}

int cmd_sample(const ExperimentConfig &config, std::ostream &log) {
  const MuSampler sampler(config.s, config.N_samp);
  CsvDocument doc("sample", config.echo());
  doc.comment("tail_variance = " + format_real(tail_variance(config.s, config.N_samp)));
  doc.header({"sample", "re_u_x0", "im_u_x0", "l2_norm_sq", "pre_ratio_max_classical",
              "pre_ratio_max_fractional"});
  const bool resolved = double(config.N_samp) * std::ldexp(1.0, -config.k_max) >= 1.0 / 16.0;
  if (!resolved) {
    log << "error: N_samp = " << config.N_samp << " does not resolve h = 2^-"
        << config.k_max << "\n";
    return 2;
  }
  for (int i = 0; i < config.samples; ++i) {
    const RandomFieldSample smp = sampler.draw(config.seed, static_cast<std::uint64_t>(i));
    const Complex u0 = smp.evaluate(config.x0);
    const double classical =
        lil_ratio(smp, config.x0, config.k_min, config.k_max, Normalizer::Classical).pre_max;
    const double fractional =
        lil_ratio(smp, config.x0, config.k_min, config.k_max, Normalizer::Fractional).pre_max;
    doc.row({str(i), str(u0.real()), str(u0.imag()), str(smp.coeffs.squaredNorm()),
             str(classical), str(fractional)});
  }
  emit(config, "sample.csv", doc, log);
  return 0;
}

// ---------------------------------------------------------------------------
// Property suite

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

CheckResult check_phase(int bound, bool nonresonance) {
  std::uint64_t tuples = 0, failures = 0;
  for (Freq n1 = -bound; n1 <= bound; ++n1) {
    for (Freq n2 = -bound; n2 <= bound; ++n2) {
      for (Freq n3 = -bound; n3 <= bound; ++n3) {
        const Freq n = n1 - n2 + n3;
        if (n < -bound || n > bound) {
          continue;
        }
        const PhaseTuple p(n1, n2, n3, n);
        if (nonresonance) {
          if (!p.non_resonant()) {
            continue;
          }
          ++tuples;
          const PhaseInt phi = phase_phi(p);
          failures += (phi < 0 ? -phi : phi) < 1;
        } else {
          ++tuples;
          failures += phase_phi(p) != phase_phi_factored(p);
        }
      }
    }
  }
  return {nonresonance ? "non_resonance" : "phase_factorization", failures == 0,
          std::to_string(tuples) + " tuples, " + std::to_string(failures) + " failures"};
}

CheckResult check_bitree_counts(int J_max) {
  bool ok = true;
  std::string detail;
  for (int J = 1; J <= J_max; ++J) {
    const std::size_t got = enumerate_ordered_bitrees(J).size();
    ok = ok && got == count_ordered_bitrees(J);
    detail += (J > 1 ? " " : "") + std::to_string(got);
  }
  return {"bitree_cardinality", ok, detail};
}

// Every assignment of [-N, N] to every node, filtered by the validity check.
std::uint64_t brute_force_index_count(const OrderedBiTree &tree, Freq N, Freq root) {
  const std::size_t nodes = tree.nodes().size();
  IndexFunction nf(nodes, -N);
  nf[0] = nf[1] = root;
  std::uint64_t count = 0;
  while (true) {
    count += is_valid_index_function(tree, nf);
    std::size_t i = 2;
    while (i < nodes && nf[i] == N) {
      nf[i++] = -N;
    }
    if (i == nodes) {
      break;
    }
    ++nf[i];
  }
  return count;
}

CheckResult check_index_functions(int J_max, Freq N_max) {
  std::uint64_t cases = 0, mismatches = 0;
  for (int J = 1; J <= J_max; ++J) {
    for (const OrderedBiTree &tree : enumerate_ordered_bitrees(J)) {
      for (Freq N = 1; N <= N_max; ++N) {
        for (Freq root = -N_max; root <= N_max; ++root) {
          IndexQuery q;
          q.mode = IndexMode::AllNodes;
          q.N = N;
          q.root = root;
          const std::uint64_t expected =
              std::abs(root) > N ? 0 : brute_force_index_count(tree, N, root);
          ++cases;
          mismatches += count_index_functions(tree, q) != expected;
        }
      }
    }
  }
  return {"index_functions", mismatches == 0,
          std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches"};
}

Eigen::VectorXcd random_coeffs(std::mt19937_64 &rng, int N) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd c(2 * N + 1);
  for (auto &x : c) {
    x = Complex(g(rng), g(rng));
  }
  return c / c.norm();
}

CheckResult check_rhs(int fields, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < fields; ++i) {
    const int N = 1 + i % 8;
    const SpectralField v(Frame::InteractionV, N, random_coeffs(rng, N));
    const double t = time(rng);
    const Eigen::VectorXcd a = rhs_interaction(v, t).coeffs();
    const Eigen::VectorXcd b = rhs_direct_oracle(v, t).coeffs();
    worst = std::max(worst, (a - b).norm() / std::max(b.norm(), 1e-300));
  }
  return {"rhs_oracle", worst <= 1e-10, "max relative error " + format_real(worst)};
}

CheckResult check_conservation(double t_final, std::uint64_t seed) {
  const int N = 32;
  const SpectralField v0 = initial_field(InitialData::Random, N, 1.0, 1.0, seed);
  IntegratorConfig ic;
  ic.truncation = N;
  ic.dt = 1e-4;
  ic.t_final = t_final;
  ic.scheme = Scheme::Conservative;
  ic.record_every = 100;
  const Trajectory traj = integrate(v0, ic);
  const Diagnostics &d0 = traj.diagnostics.front();
  double dm = 0.0, dh = 0.0;
  for (const Diagnostics &d : traj.diagnostics) {
    dm = std::max(dm, std::abs(d.mass - d0.mass));
    dh = std::max(dh, std::abs(d.hamiltonian - d0.hamiltonian) / std::abs(d0.hamiltonian));
  }
  return {"conservation", dm <= 1e-8 && dh <= 1e-6,
          "mass drift " + format_real(dm) + ", hamiltonian drift " + format_real(dh)};
}

// Re sum_n sum_{Gamma_N(n)} <n>^{2s} e^{-i phi t} / phi v_n1 conj(v_n2) v_n3 conj(v_n).
double literal_first_correction(const SpectralField &v, double t, double s) {
  const int N = v.truncation();
  double total = 0.0;
  for (int n = -N; n <= N; ++n) {
    for (int n1 = -N; n1 <= N; ++n1) {
      for (int n3 = -N; n3 <= N; ++n3) {
        const int n2 = n1 + n3 - n;
        if (n1 == n || n3 == n || n2 < -N || n2 > N) {
          continue;
        }
        const double phi = to_double(phase_phi(PhaseTuple(n1, n2, n3, n)));
        const Complex term = std::polar(1.0, -phi * t) / phi * v[n1] * std::conj(v[n2]) *
                             v[n3] * std::conj(v[n]);
        total += std::pow(japanese_bracket(n), 2.0 * s) * term.real();
      }
    }
  }
  return total;
}

CheckResult check_first_correction(int fields, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < fields; ++i) {
    const int N = 1 + i % 4;
    const SpectralField v(Frame::InteractionV, N, random_coeffs(rng, N));
    const double t = time(rng);
    const double got = eval_N0(v, t, 2, N, 0.6);
    worst = std::max(worst, std::abs(got - literal_first_correction(v, t, 0.6)));
  }
  return {"first_correction_oracle", worst <= 1e-12, "max error " + format_real(worst)};
}

CheckResult check_telescoping(const EnergyOptions &opts, std::uint64_t seed) {
  const int N = 4;
  const double s = 0.6;
  const SpectralField v0 = initial_field(InitialData::Random, N, s, 1.0, seed);
  IntegratorConfig ic;
  ic.truncation = N;
  ic.dt = 1e-4;
  ic.t_final = 0.01;
  ic.scheme = Scheme::IfRk4;
  const Trajectory traj = integrate(v0, ic);
  double gap2 = 0.0;
  std::vector<double> worst(3, 0.0);
  for (int J = 1; J <= 3; ++J) {
    for (const ResidualSample &r : telescoping_residual(traj, s, J, N, 6, opts)) {
      worst[J - 1] = std::max(worst[J - 1], std::abs(r.residual));
      if (J == 2) {
        gap2 = std::max(gap2, std::abs(r.residual - r.remainder));
      }
    }
  }
  const bool monotone = worst[1] <= worst[0] && worst[2] <= worst[1];
  return {"telescoping", gap2 <= 1e-4 && monotone,
          "gap(J=2) " + format_real(gap2) + ", max residual J=1,2,3: " +
              format_real(worst[0]) + " " + format_real(worst[1]) + " " +
              format_real(worst[2])};
}

CheckResult check_energy_drift(int seeds, std::uint64_t seed, const EnergyOptions &opts) {
  const double s = 0.6;
  const std::vector<int> Ns{2, 4, 6, 8};
  std::vector<double> sup(Ns.size(), 0.0), mean(Ns.size(), 0.0);
  bool dominated = true;
  for (int k = 0; k < seeds; ++k) {
    for (std::size_t i = 0; i < Ns.size(); ++i) {
      const SpectralField v0 = initial_field(InitialData::Random, Ns[i], s, 1.0, seed,
                                             static_cast<std::uint64_t>(k));
      IntegratorConfig ic;
      ic.truncation = Ns[i];
      ic.dt = 1e-5;
      ic.t_final = 0.01;
      ic.scheme = Scheme::IfRk4;
      const DriftReport d = energy_drift_bound(integrate(v0, ic), s, 1, Ns[i], 6, opts);
      sup[i] = std::max(sup[i], d.modified);
      mean[i] += d.modified / seeds;
      dominated = dominated && d.unmodified > d.modified;
    }
  }
  const auto [lo, hi] = std::minmax_element(sup.begin(), sup.end());
  const double spread = *hi / *lo;
  std::string detail = "max drift by N:";
  for (double x : sup) {
    detail += " " + format_real(x);
  }
  const auto [mlo, mhi] = std::minmax_element(mean.begin(), mean.end());
  detail += ", spread " + format_real(spread) + " (ensemble mean spread " +
            format_real(*mhi / *mlo) + ")";
  return {"energy_drift", spread <= 2.0 && dominated, detail};
}

CheckResult check_divisor_sum() {
  const double a = divisor_sum_diagnostic(0.6, 128);
  const double b = divisor_sum_diagnostic(0.6, 256);
  const double rel = std::abs(b - a) / std::abs(a);
  return {"divisor_sum", rel <= 0.05,
          format_real(a) + " -> " + format_real(b) + ", change " + format_real(rel)};
}

CheckResult check_increment_variance(int N_cut) {
  double lo = INFINITY, hi = 0.0;
  for (int k = 6; k <= 14; ++k) {
    const double x = std::ldexp(1.0, -k);
    const double r = increment_variance(1.5, x, N_cut) / (x * x * std::log(1.0 / x));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const double variation = (hi - lo) / lo;
  return {"increment_variance", variation < 0.10,
          "ratio in [" + format_real(lo) + ", " + format_real(hi) + "], variation " +
              format_real(variation)};
}

CheckResult check_lil(bool quick, std::uint64_t seed) {
  LILExperimentConfig c;
  c.seed = seed;
  if (quick) {
    c.N_samp = 1 << 12;
    c.k_max = 14;
  }
  const LILExperimentReport r = lil_breakdown_experiment(c);
  return {"lil_breakdown", r.conditioned >= 30 && r.rank.p_value < 0.05,
          std::to_string(r.conditioned) + " conditioned of " + std::to_string(r.draws) +
              " draws, medians " + format_real(r.median_pre) + " -> " +
              format_real(r.median_post) + ", p " + format_real(r.rank.p_value)};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CheckResult check_determinism(const fs::path &scratch) {
  std::ostringstream sink;
  ExperimentConfig c;
  c.command = "simulate";
  c.N = 8;
  c.dt = 1e-3;
  c.t_final = 0.05;
  c.record_every = 10;
  const std::array<const char *, 2> files{"simulate_trajectory.csv",
                                          "simulate_diagnostics.csv"};
  std::array<std::string, 2> first;
  bool same = true;
  for (int run = 0; run < 2; ++run) {
    c.out = scratch / ("run" + std::to_string(run));
    cmd_simulate(c, sink);
    for (std::size_t f = 0; f < files.size(); ++f) {
      const std::string text = slurp(c.out / files[f]);
      if (run == 0) {
        first[f] = text;
      } else {
        same = same && text == first[f];
      }
    }
  }
  fs::remove_all(scratch);
  return {"determinism", same, same ? "byte-identical" : "outputs differ"};
}

} // namespace

std::vector<CheckResult> run_checks(const ExperimentConfig &config) {
  const bool quick = config.quick;
  const EnergyOptions opts = energy_options(config);
  std::vector<std::function<CheckResult()>> suite{
      [&] { return check_phase(quick ? 12 : 30, false); },
      [&] { return check_phase(quick ? 12 : 30, true); },
      [&] { return check_bitree_counts(quick ? 5 : 6); },
      [&] { return check_index_functions(quick ? 1 : 2, 3); },
      [&] { return check_rhs(100, config.seed); },
      [&] { return check_conservation(quick ? 0.1 : 1.0, config.seed); },
      [&] { return check_first_correction(50, config.seed); },
      [&] { return check_telescoping(opts, config.seed); },
      [&] { return check_energy_drift(8, config.seed, opts); },
      [&] { return check_divisor_sum(); },
      [&] { return check_increment_variance(1 << 18); },
      [&] { return check_lil(quick, config.seed); },
      [&] { return check_determinism(config.out / ".nf4nls-determinism"); },
  };
  std::vector<CheckResult> results;
  for (auto &check : suite) {
    const auto t0 = Clock::now();
    results.push_back(check());
    results.back().seconds = seconds_since(t0);
  }
  return results;
}

int cmd_check(const ExperimentConfig &config, std::ostream &log) {
  CsvDocument doc("check", config.echo());
  doc.header({"check", "status", "detail"});
  bool all = true;
  for (const CheckResult &r : run_checks(config)) {
    log << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " (" << std::fixed
        << std::setprecision(2) << r.seconds << std::defaultfloat << " s)" << std::endl;
    doc.row({r.name, r.pass ? "PASS" : "FAIL", "\"" + r.detail + "\""});
    all = all && r.pass;
  }
  emit(config, "check.csv", doc, log);
  return all ? 0 : 1;
}

int dispatch(const ExperimentConfig &config, std::ostream &log) {
  config.validate();
  if (config.command == "simulate") {
    return cmd_simulate(config, log);
  }
  if (config.command == "energy") {
    return cmd_energy(config, log);
  }
  if (config.command == "bitree") {
    return cmd_bitree(config, log);
  }
  if (config.command == "lil") {
    return cmd_lil(config, log);
  }
  if (config.command == "sample") {
    return cmd_sample(config, log);
  }
  if (config.command == "check") {
    return cmd_check(config, log);
  }
  throw std::invalid_argument("unknown command '" + config.command + "'");
}

} // namespace nf4nls
