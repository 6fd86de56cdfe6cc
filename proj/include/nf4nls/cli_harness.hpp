#ifndef NF4NLS_CLI_HARNESS_HPP
#define NF4NLS_CLI_HARNESS_HPP

#include "nf4nls/csv.hpp"
#include "nf4nls/dynamics.hpp"
#include "nf4nls/gaussian_lab.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace nf4nls {

enum class InitialData { Random, SingleMode, Zero };
std::string_view initial_data_tag(InitialData d);
InitialData parse_initial_data(std::string_view tag);

/// Parameters shared by every subcommand. Each command reads what it needs
/// and echoes the full record into its output headers.
struct ExperimentConfig {
  std::string command;

  // dynamics and energy
  int N = 16;
  double dt = 1e-4;
  double t_final = 1.0;
  Scheme scheme = Scheme::Conservative;
  int record_every = 1;
  InitialData data = InitialData::Random;
  double mass = 1.0;

  // normal form
  double s = 0.6;
  int J_max = 1;
  int fd_order = 4;
  std::vector<int> n_sweep{2, 4, 6, 8};

  // sampling
  std::uint64_t seed = 1;
  int samples = 8;
  int N_samp = 1 << 16;
  int k_min = 6;
  int k_max = 20;
  double x0 = 3.14159265358979323846;
  Normalizer normalizer = Normalizer::Classical;
  int k_branch = 3;
  double eps = 0.3;
  std::uint64_t max_draws = 100000;
  int baseline = 32;

  // check
  bool inject_parity_error = false;
  bool quick = false;

  std::filesystem::path out = ".";

  ConfigEcho echo() const;
  /// Validates the fields `command` reads.
  void validate() const;
};

/// Initial data in the interaction frame, drawn from stream (seed, index)
/// with <n>^{-s} decay and rescaled to the requested mass. Truncations of one
/// stream are nested.
SpectralField initial_field(InitialData kind, int N, double s, double mass,
                            std::uint64_t seed, std::uint64_t index = 0);

/// Files land in config.out. Each returns the process exit code.
int cmd_simulate(const ExperimentConfig &config, std::ostream &log);
int cmd_energy(const ExperimentConfig &config, std::ostream &log);
int cmd_bitree(const ExperimentConfig &config, std::ostream &log);
int cmd_lil(const ExperimentConfig &config, std::ostream &log);
int cmd_sample(const ExperimentConfig &config, std::ostream &log);
int cmd_check(const ExperimentConfig &config, std::ostream &log);

struct CheckResult {
  std::string name;
  bool pass;
  std::string detail;
  double seconds = 0.0; ///< wall time; not written to check.csv
};

/// The property suite behind cmd_check.
std::vector<CheckResult> run_checks(const ExperimentConfig &config);

int dispatch(const ExperimentConfig &config, std::ostream &log);

} // namespace nf4nls

#endif // NF4NLS_CLI_HARNESS_HPP
