#include "blockrg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "blockrg/error.hpp"

namespace blockrg {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const Json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

Json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double get_double(const Json& j, const char* key, double fallback, double lo, double hi) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
  const double x = v.get<double>();
  if (!(x >= lo && x <= hi)) throw ConfigError(std::string(key) + " out of range");
  return x;
}

int get_int(const Json& j, const char* key, int fallback, int lo, int hi) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
  const auto x = v.get<long long>();
  if (x < lo || x > hi) throw ConfigError(std::string(key) + " out of range");
  return static_cast<int>(x);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header, std::string hash) : header_(std::move(header)), hash_(std::move(hash)) {}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw ConfigError("csv row width mismatch");
  rows_.push_back(std::move(row));
}

void CsvTable::add_numbers(const std::vector<double>& row) {
  std::vector<std::string> s;
  for (double v : row) s.push_back(format_double(v));
  add(std::move(s));
}

std::string CsvTable::str() const {
  std::ostringstream out;
  out << "# config_hash=" << hash_ << '\n';
  auto line = [&out](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out.str();
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << str();
}

void PlotData::add(const std::string& series, double x, double y) {
  table_.add({series, format_double(x), format_double(y)});
}

FlowState state_from_json(const Json& j) {
  reject_unknown_keys(j, {"d", "L", "unit_side", "k", "m", "lambda", "mu", "epsilon", "a", "mu_bar_k", "E4", "E6"},
                      "state");
  const int d = get_int(j, "d", 1, 1, 3);
  const int L = get_int(j, "L", 3, 2, 9);
  const int side = get_int(j, "unit_side", 6, 1, 64);
  const int k = get_int(j, "k", 1, 1, 8);
  const int m = get_int(j, "m", 0, 0, 4);
  FlowState s = micro_state(d, L, side, k, m, get_double(j, "lambda", 1e-3, 0.0, 1.0), get_double(j, "mu", 0.0, -1.0, 1.0),
                            get_double(j, "epsilon", 0.0, -1e6, 1e6), get_double(j, "a", 1.0, 1e-6, 1e6),
                            get_double(j, "mu_bar_k", 0.0, 0.0, 1e6));
  const double e4 = get_double(j, "E4", 0.0, -1e6, 1e6);
  const double e6 = get_double(j, "E6", 0.0, -1e6, 1e6);
  for (Index q = 0; q < s.E.cube_torus().count(); ++q) {
    Polymer X = s.E.polymer({q});
    if (e4 != 0.0) s.E.add_monomial(X, e4, 4);
    if (e6 != 0.0) s.E.add_monomial(X, e6, 6);
  }
  return s;
}

StepControls controls_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"quad_nodes", "n_max", "kappa", "eps", "alpha", "rho", "p", "p0", "norm_samples", "probe_fields",
                       "seed", "lambda_threshold", "eps0_margin", "max_polymers", "max_grid"},
                      "controls");
  StepControls c;
  c.quad_nodes = get_int(j, "quad_nodes", c.quad_nodes, 1, 64);
  c.n_max = get_int(j, "n_max", c.n_max, 1, 32);
  c.kappa = get_double(j, "kappa", c.kappa, 0.0, 100.0);
  c.eps = get_double(j, "eps", c.eps, 0.0, 0.025);
  c.alpha = get_double(j, "alpha", c.alpha, 0.0, 1.0);
  c.rho = get_double(j, "rho", c.rho, 1e-6, 1e6);
  c.p = get_int(j, "p", c.p, 0, 20);
  c.p0 = get_int(j, "p0", c.p0, 0, 20);
  c.norm_samples = get_int(j, "norm_samples", c.norm_samples, 0, 1000);
  c.probe_fields = get_int(j, "probe_fields", c.probe_fields, 0, 1000);
  c.seed = static_cast<unsigned>(get_int(j, "seed", static_cast<int>(c.seed), 0, 1 << 30));
  c.lambda_threshold = get_double(j, "lambda_threshold", c.lambda_threshold, 0.0, 1.0);
  c.eps0_margin = get_double(j, "eps0_margin", c.eps0_margin, 0.0, 1e12);
  c.caps.max_polymers = get_int(j, "max_polymers", c.caps.max_polymers, 1, 30);
  c.caps.max_grid = static_cast<std::int64_t>(get_double(j, "max_grid", static_cast<double>(c.caps.max_grid), 1, 1e12));
  return c;
}

FlowParams flow_params_from_json(const Json& j) {
  reject_unknown_keys(j, {"d", "L", "K", "Delta", "lambda", "beta", "eps"}, "flow");
  FlowParams p;
  p.d = get_int(j, "d", p.d, 1, 3);
  p.L = get_int(j, "L", p.L, 2, 9);
  p.K = get_int(j, "K", p.K, 1, 10000);
  p.Delta = get_int(j, "Delta", p.Delta, 0, 10000);
  p.lambda = get_double(j, "lambda", p.lambda, 0.0, 1e3);
  p.eps = get_double(j, "eps", p.eps, 0.0, 0.025);
  p.beta = get_double(j, "beta", p.beta, 0.0, 0.25 - 10 * p.eps);
  return p;
}

SurrogateParams surrogate_from_json(const Json& j) {
  reject_unknown_keys(j, {"n_E", "c_mu", "c_E", "c_eps", "c1", "c2", "theta", "eps"}, "surrogate");
  SurrogateParams s;
  s.n_E = get_int(j, "n_E", s.n_E, 1, 1024);
  s.c_mu = get_double(j, "c_mu", s.c_mu, -1e3, 1e3);
  s.c_E = get_double(j, "c_E", s.c_E, -1e3, 1e3);
  s.c_eps = get_double(j, "c_eps", s.c_eps, -1e3, 1e3);
  s.c1 = get_double(j, "c1", s.c1, -1e3, 1e3);
  s.c2 = get_double(j, "c2", s.c2, -1e3, 1e3);
  s.theta = get_double(j, "theta", s.theta, -1e3, 1e3);
  s.eps = get_double(j, "eps", s.eps, 0.0, 0.025);
  return s;
}

ClusterInstance cluster_from_json(const Json& H, const Json& measure) {
  reject_unknown_keys(H, {"cells", "polymers"}, "cluster input");
  ClusterInstance inst;
  if (!H.contains("cells") || !H.at("cells").is_array()) throw ConfigError("cluster input: 'cells' array required");
  int n_sites = 0;
  for (const auto& c : H.at("cells")) {
    std::vector<int> sites = c.get<std::vector<int>>();
    for (int s : sites) n_sites = std::max(n_sites, s + 1);
    inst.cell_sites.push_back(std::move(sites));
  }
  inst.n_sites = n_sites;
  if (inst.n_cells() > 32) throw CapExceeded("at most 32 cells");
  for (const auto& p : H.value("polymers", Json::array())) {
    reject_unknown_keys(p, {"cells", "terms"}, "polymer");
    CellMask mask = 0;
    for (int c : p.at("cells").get<std::vector<int>>()) {
      if (c < 0 || c >= inst.n_cells()) throw ConfigError("polymer cell out of range");
      mask |= CellMask{1} << c;
    }
    struct Term {
      double coeff;
      std::vector<int> sites, powers;
    };
    std::vector<Term> terms;
    for (const auto& t : p.value("terms", Json::array())) {
      reject_unknown_keys(t, {"coeff", "sites", "powers"}, "term");
      Term term{t.at("coeff").get<double>(), t.value("sites", std::vector<int>{}), t.value("powers", std::vector<int>{})};
      if (term.sites.size() != term.powers.size()) throw ConfigError("term sites and powers differ in length");
      for (int s : term.sites)
        if (s < 0 || s >= n_sites) throw ConfigError("term site out of range");
      terms.push_back(std::move(term));
    }
    inst.polymers.push_back({mask, [terms](const double* W) {
                               double h = 0.0;
                               for (const auto& t : terms) {
                                 double v = t.coeff;
                                 for (std::size_t i = 0; i < t.sites.size(); ++i)
                                   v *= std::pow(W[t.sites[i]], t.powers[i]);
                                 h += v;
                               }
                               return h;
                             }});
  }
  reject_unknown_keys(measure, {"type", "points", "weights", "nodes", "p"}, "measure");
  const std::string type = measure.value("type", std::string("atoms"));
  if (type == "atoms") {
    inst.measure = UltralocalMeasure::atoms(measure.at("points").get<std::vector<double>>(),
                                            measure.at("weights").get<std::vector<double>>());
  } else if (type == "truncated_gaussian") {
    inst.measure = UltralocalMeasure::truncated_gaussian(get_int(measure, "nodes", 5, 1, 64),
                                                         get_double(measure, "p", 1.0, 1e-6, 100.0));
  } else {
    throw ConfigError("unknown measure type '" + type + "'");
  }
  inst.validate();
  return inst;
}

Json to_json(const TailEstimate& t) {
  return Json{{"alternating", t.alternating}, {"tree_graph", t.tree_graph}, {"reported", t.reported},
              {"summable", t.summable}};
}

Json to_json(const StepReport& r) {
  Json bounds = Json::array();
  for (const auto& b : r.bounds)
    bounds.push_back({{"name", b.name}, {"value", b.value}, {"envelope", b.envelope}, {"prefactor", b.prefactor}});
  return Json{{"lambda_k", r.lambda_k},
              {"lambda_next", r.lambda_next},
              {"mu_bar_k", r.mu_bar_k},
              {"mu_bar_next", r.mu_bar_next},
              {"mu_bar_schedule_error", r.mu_bar_schedule_error},
              {"E_norm_in", r.E_norm_in},
              {"epsilon0", r.epsilon0},
              {"epsilon0_bound", r.epsilon0_bound},
              {"epsilon0_ok", r.epsilon0_ok},
              {"chi_ratio", r.chi_ratio},
              {"chi_ok", r.chi_ok},
              {"audit_change_of_variables", r.audit_change_of_variables},
              {"audit_w_substitution", r.audit_w_substitution},
              {"audit_assembly", r.audit_assembly},
              {"audit_final_form", r.audit_final_form},
              {"telescope_error", r.telescope_error},
              {"disconnected_max", r.disconnected_max},
              {"locality_error", r.locality_error},
              {"xi_error", r.xi_error},
              {"tail", to_json(r.tail)},
              {"evenness_error", r.evenness_error},
              {"renormalization_residual", r.renormalization_residual},
              {"bounds", bounds},
              {"seconds", r.seconds}};
}

Json to_json(const StepPieces& p) {
  return Json{{"L1E", p.L1E},
              {"L2E", p.L2E},
              {"epsilon0", p.epsilon0},
              {"epsilon_star", p.epsilon_star},
              {"mu_star", p.mu_star},
              {"epsilon_next", p.epsilon_next},
              {"mu_next", p.mu_next},
              {"lambda_next", p.lambda_next},
              {"k_next", p.gauss_next.k},
              {"mu_bar_next", p.gauss_next.mu_bar_k},
              {"E_next_polymers", p.E_next.terms().size()}};
}

Json to_json(const ClusterResult& r) {
  Json K = Json::array(), H = Json::array();
  for (const auto& [Y, v] : r.K_sharp) K.push_back({{"cells", Y}, {"value", v}});
  for (const auto& [Y, v] : r.H_sharp) H.push_back({{"cells", Y}, {"value", v}});
  return Json{{"n_max", r.n_max}, {"total", r.total},    {"order_totals", r.order_totals},
              {"K_sharp", K},     {"H_sharp", H},        {"tail", to_json(r.tail)}};
}

}  // namespace blockrg
