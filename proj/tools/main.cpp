#include "nf4nls/bitrees.hpp"
#include "nf4nls/cli_harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using namespace nf4nls;

namespace {

// Command-specific defaults; every flag is still accepted by every command.
ExperimentConfig defaults_for(const std::string &command) {
  ExperimentConfig c;
  c.command = command;
  if (command == "simulate") {
    c.N = 32;
    c.record_every = 100;
  } else if (command == "energy") {
    c.N = 4;
    c.t_final = 0.01;
    c.scheme = Scheme::IfRk4;
    c.J_max = 2;
    c.fd_order = 6;
    c.samples = 2;
    c.record_every = 1;
  } else if (command == "bitree") {
    c.J_max = 3;
  } else if (command == "lil") {
    c.s = 1.0;
    c.samples = 40;
  } else if (command == "sample") {
    c.s = 1.0;
  }
  return c;
}

void bind(CLI::App &sub, ExperimentConfig &c, std::string &scheme, std::string &data,
          std::string &normalizer) {
  sub.add_option("--n", c.N, "Truncation N")->capture_default_str();
  sub.add_option("--dt", c.dt, "Time step")->capture_default_str();
  sub.add_option("--t-final", c.t_final, "Final time (flow time for lil)")->capture_default_str();
  sub.add_option("--s", c.s, "Sobolev index")->capture_default_str();
  sub.add_option("--jmax", c.J_max, "Normal form depth, or tree depth for bitree")
      ->capture_default_str();
  sub.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub.add_option("--samples", c.samples,
                 "Ensemble size (conditioned samples for lil)")
      ->capture_default_str();
  sub.add_option("--out", c.out, "Output directory")->capture_default_str();
  sub.add_option("--scheme", scheme, "if_rk4 | rk4_direct | conservative")
      ->capture_default_str();
  sub.add_option("--record-every", c.record_every, "Snapshot stride")->capture_default_str();
  sub.add_option("--data", data, "random | single | zero")->capture_default_str();
  sub.add_option("--mass", c.mass, "Initial mass")->capture_default_str();
  sub.add_option("--fd-order", c.fd_order, "Finite difference order 2 | 4 | 6")
      ->capture_default_str();
  sub.add_option("--n-sweep", c.n_sweep, "Truncations for the drift sweep")
      ->capture_default_str();
  sub.add_option("--n-samp", c.N_samp, "Series truncation for sampling")
      ->capture_default_str();
  sub.add_option("--k-min", c.k_min, "Coarsest dyadic scale")->capture_default_str();
  sub.add_option("--k-max", c.k_max, "Finest dyadic scale")->capture_default_str();
  sub.add_option("--x0", c.x0, "Reference point")->capture_default_str();
  sub.add_option("--normalizer", normalizer, "classical | fractional | critical")
      ->capture_default_str();
  sub.add_option("--k-branch", c.k_branch, "Branch k in M^2 = -pi/2 + 2 pi k")
      ->capture_default_str();
  sub.add_option("--eps", c.eps, "Conditioning window")->capture_default_str();
  sub.add_option("--max-draws", c.max_draws, "Draw limit for lil")->capture_default_str();
  sub.add_option("--baseline", c.baseline, "Unconditioned baseline draws")
      ->capture_default_str();
  sub.add_flag("--inject-parity-error", c.inject_parity_error,
               "Break the parity rule (mutation test)");
  sub.add_flag("--quick", c.quick, "Smaller problem sizes for check");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Normal form and Gaussian measure experiments for the cubic fourth order NLS"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "Integrate the truncated system and write coefficients and diagnostics"},
      {"energy", "Modified energy breakdown, telescoping residuals and the drift sweep"},
      {"bitree", "Count and dump ordered bi-trees"},
      {"lil", "Conditioned LIL breakdown experiment"},
      {"sample", "Draw Gaussian series samples and their LIL ratios"},
      {"check", "Run the property suite"},
  };
  std::map<std::string, ExperimentConfig> configs;
  std::map<std::string, std::array<std::string, 3>> tags;
  for (const auto &[name, help] : commands) {
    configs[name] = defaults_for(name);
    const ExperimentConfig &c = configs[name];
    tags[name] = {std::string(scheme_tag(c.scheme)), std::string(initial_data_tag(c.data)),
                  std::string(normalizer_tag(c.normalizer))};
    CLI::App *sub = app.add_subcommand(name, help);
    bind(*sub, configs[name], tags[name][0], tags[name][1], tags[name][2]);
  }

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  ExperimentConfig config = configs[name];
  try {
    config.scheme = parse_scheme(tags[name][0]);
    config.data = parse_initial_data(tags[name][1]);
    config.normalizer = parse_normalizer(tags[name][2]);
    return dispatch(config, std::cout);
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IntegrationError &e) {
    std::cerr << "error: integration failed at step " << e.step_index() << ": " << e.what()
              << "\n";
    return 3;
  } catch (const BudgetExceeded &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
}
