#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "blockrg/error.hpp"
#include "commands.hpp"

using namespace blockrg;

int main(int argc, char** argv) {
  CLI::App app{"blockrg: block-spin renormalization group toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config;
  std::optional<unsigned> seed;
  std::optional<std::string> plot;
  app.add_option("--config", config, "JSON run configuration");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--emit-plot-data", plot, "write long-format CSV for plotting");

  cli::VerifyArgs va;
  auto* verify = app.add_subcommand("verify-identities", "averaging, Gaussian and resolvent identities");
  verify->add_option("--out", va.out, "CSV output (default stdout)");

  cli::GaussianFlowArgs ga;
  auto* gflow = app.add_subcommand("gaussian-flow", "a_k, mu_bar_k and log Z_k per level");
  gflow->add_option("--out", ga.out);

  cli::GreensArgs gr;
  auto* greens = app.add_subcommand("greens-decay", "exponential decay of the Green's functions");
  greens->alias("greens");
  greens->add_option("--probe", gr.probe);
  greens->add_option("--out", gr.out);

  cli::PolymerArgs pa;
  auto* poly = app.add_subcommand("polymers", "polymer counting and geometry audit");
  poly->add_option("--d", pa.d);
  poly->add_option("--max-size", pa.max_size);
  poly->add_option("--emit", pa.emit);

  cli::ClusterArgs ca;
  auto* clus = app.add_subcommand("cluster", "cluster expansion of a polymer system");
  clus->add_option("--input", ca.input)->required();
  clus->add_option("--measure", ca.measure)->required();
  clus->add_option("--out", ca.out);
  clus->add_option("--n-max", ca.n_max);
  clus->add_flag("--oracle", ca.oracle, "compare against brute-force integration");

  cli::StepArgs sa;
  auto* stp = app.add_subcommand("step", "one modified RG step on a micro-instance");
  stp->add_option("--state", sa.state);
  stp->add_option("--controls", sa.controls);
  stp->add_option("--report", sa.report);

  cli::FlowArgs fa;
  auto* flw = app.add_subcommand("flow", "fixed point of the coupling flow");
  flw->add_option("--maps", fa.maps, "surrogate, pipeline, or a surrogate JSON file");
  flw->add_option("--K", fa.K);
  flw->add_option("--L", fa.L);
  flw->add_option("--lambda", fa.lambda);
  flw->add_option("--Delta", fa.Delta);
  flw->add_option("--out", fa.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cli::Common common = cli::load_common(config, seed, plot);
    if (*verify) return cli::verify_identities(common, va);
    if (*gflow) return cli::gaussian_flow(common, ga);
    if (*greens) return cli::greens_decay(common, gr);
    if (*poly) return cli::polymers(common, pa);
    if (*clus) return cli::cluster(common, ca);
    if (*stp) return cli::step(common, sa);
    if (*flw) return cli::flow(common, fa);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const CapExceeded& e) {
    std::cerr << "cap exceeded: " << e.what() << '\n';
    return 3;
  } catch (const CheckFailed& e) {
    std::cerr << "check failure: " << e.what() << '\n';
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
