#include <cmath>

#include "doctest.h"

#include "blockrg/error.hpp"
#include "blockrg/io.hpp"

using namespace blockrg;

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config hash") {
  const Json a = parse_json_text(R"({"global": {"d": 1, "L": 3}, "seed": 4})", "a");
  const Json b = parse_json_text(R"({"global": {"d": 1, "L": 3}, "seed": 5})", "b");
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) == config_hash(a));
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("malformed and unexpected input") {
  try {
    parse_json_text("{\"a\": 1,\n  \"b\": }", "cfg");
    FAIL("no exception");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  const Json j = parse_json_text(R"({"d": 2, "colour": 1})", "x");
  CHECK_THROWS_AS(reject_unknown_keys(j, {"d"}, "x"), ConfigError);
  CHECK_NOTHROW(reject_unknown_keys(j, {"d", "colour"}, "x"));
  CHECK(get_int(j, "d", 1, 1, 3) == 2);
  CHECK(get_int(j, "missing", 7, 1, 9) == 7);
  CHECK_THROWS_AS(get_int(j, "d", 1, 3, 4), ConfigError);
  CHECK_THROWS_AS(get_double(parse_json_text(R"({"x": "no"})", "x"), "x", 0.0, 0.0, 1.0), ConfigError);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv tables carry the config hash") {
  CsvTable t({"k", "v"}, "0123456789abcdef");
  t.add_numbers({1.0, 0.25});
  t.add({"2", "x"});
  CHECK(t.rows() == 2);
  CHECK(t.str() == "# config_hash=0123456789abcdef\nk,v\n1,0.25\n2,x\n");
  CHECK_THROWS(t.add({"1"}));
}

TEST_CASE("state and controls from json") {
  FlowState s = state_from_json(parse_json_text(R"({"d": 1, "L": 3, "unit_side": 6, "lambda": 0.002, "mu": 0.01})", "s"));
  CHECK(s.lattice().size() == 18);
  CHECK(s.lambda == 0.002);
  CHECK(s.mu == 0.01);
  StepControls c = controls_from_json(parse_json_text(R"({"quad_nodes": 4, "n_max": 8, "max_polymers": 12})", "c"));
  CHECK(c.quad_nodes == 4);
  CHECK(c.n_max == 8);
  CHECK(c.caps.max_polymers == 12);
  CHECK_THROWS_AS(controls_from_json(parse_json_text(R"({"nodes": 4})", "c")), ConfigError);
  FlowParams p = flow_params_from_json(parse_json_text(R"({"K": 5, "lambda": 0.5})", "f"));
  CHECK(p.K == 5);
  CHECK(p.lambda == 0.5);
}

TEST_CASE("cluster instances from json") {
  const Json H = parse_json_text(R"({"cells": [[0], [1]],
    "polymers": [{"cells": [0, 1], "terms": [{"coeff": 0.1, "sites": [0, 1], "powers": [2, 2]}]},
                 {"cells": [1], "terms": [{"coeff": -0.2, "sites": [], "powers": []}]}]})",
                                 "H");
  const Json mu = parse_json_text(R"({"type": "atoms", "points": [-1, 1], "weights": [0.5, 0.5]})", "mu");
  ClusterInstance inst = cluster_from_json(H, mu);
  CHECK(inst.n_cells() == 2);
  CHECK(inst.n_sites == 2);
  REQUIRE(inst.polymers.size() == 2);
  CHECK(inst.polymers[0].cells == 3u);
  const double W[2] = {2.0, 3.0};
  CHECK(inst.polymers[0].H(W) == doctest::Approx(0.1 * 4.0 * 9.0));
  CHECK(inst.polymers[1].H(W) == doctest::Approx(-0.2));
  const Json g = parse_json_text(R"({"type": "truncated_gaussian", "nodes": 5, "p": 4.0})", "g");
  CHECK(cluster_from_json(H, g).measure.normalized());
  ClusterResult r = run_cluster_expansion(inst, 10);
  const Json out = to_json(r);
  CHECK(out["n_max"] == 10);
  CHECK(out.contains("H_sharp"));
  CHECK_THROWS_AS(cluster_from_json(H, parse_json_text(R"({"type": "lebesgue"})", "m")), ConfigError);
}
