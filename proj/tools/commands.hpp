#pragma once

#include <optional>
#include <string>

#include "blockrg/io.hpp"

namespace blockrg::cli {

struct Common {
  Json config = Json::object();  // whole config file
  std::string hash;
  unsigned seed = 1;
  std::optional<std::string> plot_path;
};

// Loads and validates the top-level config; command blocks are checked by the commands.
Common load_common(const std::string& config_path, std::optional<unsigned> seed, std::optional<std::string> plot);

struct VerifyArgs {
  std::string out;
};
int verify_identities(const Common& c, const VerifyArgs& a);

struct GaussianFlowArgs {
  std::string out;
};
int gaussian_flow(const Common& c, const GaussianFlowArgs& a);

struct GreensArgs {
  std::string probe = "decay";
  std::string out;
};
int greens_decay(const Common& c, const GreensArgs& a);

struct PolymerArgs {
  int d = 2;
  int max_size = 6;
  std::string emit;
};
int polymers(const Common& c, const PolymerArgs& a);

struct ClusterArgs {
  std::string input, measure, out;
  bool oracle = false;
  int n_max = 12;
};
int cluster(const Common& c, const ClusterArgs& a);

struct StepArgs {
  std::string state, controls, report;
};
int step(const Common& c, const StepArgs& a);

struct FlowArgs {
  std::string maps = "surrogate";
  std::optional<int> K, L, Delta;
  std::optional<double> lambda;
  std::string out;
};
int flow(const Common& c, const FlowArgs& a);

}  // namespace blockrg::cli
