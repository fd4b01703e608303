#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "blockrg/cluster.hpp"
#include "blockrg/flow.hpp"
#include "blockrg/rg_step.hpp"

namespace blockrg {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view bytes);
// 16 hex digits of the FNV-1a hash of the canonical dump.
std::string config_hash(const Json& config);

// ConfigError carrying line and column on malformed input.
Json parse_json_text(const std::string& text, const std::string& where);
Json load_json(const std::string& path);
void save_json(const Json& j, const std::string& path);
void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where);

// Typed getters that reject wrong types and out-of-range values.
double get_double(const Json& j, const char* key, double fallback, double lo, double hi);
int get_int(const Json& j, const char* key, int fallback, int lo, int hi);

// Shortest round-trip formatting.
std::string format_double(double v);

class CsvTable {
 public:
  CsvTable(std::vector<std::string> header, std::string hash);
  void add(std::vector<std::string> row);
  void add_numbers(const std::vector<double>& row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::string hash_;
  std::vector<std::vector<std::string>> rows_;
};

// Long format (series, x, y) for external plotting.
class PlotData {
 public:
  explicit PlotData(std::string hash) : table_({"series", "x", "y"}, std::move(hash)) {}
  void add(const std::string& series, double x, double y);
  void write(const std::string& path) const { table_.write(path); }

 private:
  CsvTable table_;
};

// {"d","L","unit_side","k","m","lambda","mu","epsilon","a","mu_bar_k","E4","E6"}.
FlowState state_from_json(const Json& j);
StepControls controls_from_json(const Json& j);
FlowParams flow_params_from_json(const Json& j);
SurrogateParams surrogate_from_json(const Json& j);

// Polymers: {"cells": [...], "terms": [{"coeff": c, "sites": [...], "powers": [...]}]}
// with H = sum coeff prod W_site^power.
ClusterInstance cluster_from_json(const Json& H, const Json& measure);

Json to_json(const StepReport& r);
Json to_json(const StepPieces& p);
Json to_json(const ClusterResult& r);
Json to_json(const TailEstimate& t);

}  // namespace blockrg
