// Batch front end: reads a JSON run configuration and dispatches the
// price / converge / check / couple commands, writing CSV results.
//
// Exit codes: 0 success, 2 configuration/schema error, 3 model or grid
// infeasibility, 4 numerical failure.

#include <cinttypes>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "distlat/checks.hpp"
#include "distlat/closedform.hpp"
#include "distlat/common.hpp"
#include "distlat/coupling.hpp"
#include "distlat/distortion.hpp"
#include "distlat/lattice.hpp"
#include "distlat/levy.hpp"
#include "distlat/valuation.hpp"

namespace {

using distlat::ConfigError;
using nlohmann::json;

void expect_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double need_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ConfigError(where + " needs numeric field '" + key + "'");
  return j.at(key).get<double>();
}

std::string need_string(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw ConfigError(where + " needs string field '" + key + "'");
  return j.at(key).get<std::string>();
}

distlat::LevyModel parse_model(const json& j) {
  const std::string type = need_string(j, "type", "model");
  if (type == "gbm") {
    expect_keys(j, {"type", "mu", "sigma"}, "model");
    const double mu = need_number(j, "mu", "model");
    const double sigma = need_number(j, "sigma", "model");
    if (sigma <= 0.0) throw ConfigError("gbm model needs sigma > 0");
    return distlat::LevyModel::brownian(mu - 0.5 * sigma * sigma, sigma);
  }
  if (type == "tailcgmy") {
    expect_keys(j, {"type", "drift", "sigma", "C", "G", "M", "Y", "q"}, "model");
    const double q = j.contains("q") ? need_number(j, "q", "model") : 1.0;
    return distlat::LevyModel::tail_cgmy(need_number(j, "drift", "model"),
                                         need_number(j, "sigma", "model"),
                                         need_number(j, "C", "model"), need_number(j, "G", "model"),
                                         need_number(j, "M", "model"), need_number(j, "Y", "model"),
                                         q);
  }
  if (type == "tabulated") {
    expect_keys(j, {"type", "drift", "sigma", "x_right", "tail_right", "x_left", "tail_left", "q"},
                "model");
    const auto vec = [&](const char* key) {
      if (!j.contains(key) || !j.at(key).is_array())
        throw ConfigError(std::string("tabulated model needs array '") + key + "'");
      return j.at(key).get<std::vector<double>>();
    };
    const double q = j.contains("q") ? need_number(j, "q", "model") : 1.0;
    return distlat::LevyModel::tabulated_tails(
        need_number(j, "drift", "model"), need_number(j, "sigma", "model"), vec("x_right"),
        vec("tail_right"), vec("x_left"), vec("tail_left"), q);
  }
  throw ConfigError("unknown model type '" + type + "'");
}

distlat::ProbabilityDistortion parse_probability_distortion(const json& j);

distlat::ProbabilityDistortion parse_probability_distortion(const json& j) {
  const std::string fam = need_string(j, "family", "distortion");
  if (fam == "linear") {
    expect_keys(j, {"family"}, "distortion");
    return distlat::ProbabilityDistortion::linear();
  }
  if (fam == "minmaxvar") {
    expect_keys(j, {"family", "gamma"}, "distortion");
    return distlat::ProbabilityDistortion::minmaxvar(need_number(j, "gamma", "distortion"));
  }
  if (fam == "exponential") {
    expect_keys(j, {"family", "alpha"}, "distortion");
    return distlat::ProbabilityDistortion::exponential(need_number(j, "alpha", "distortion"));
  }
  if (fam == "piecewise_linear") {
    expect_keys(j, {"family", "knots"}, "distortion");
    if (!j.contains("knots") || !j.at("knots").is_array())
      throw ConfigError("piecewise_linear distortion needs array 'knots'");
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : j.at("knots")) {
      if (!k.is_array() || k.size() != 2) throw ConfigError("each knot must be [p, value]");
      knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
    }
    return distlat::ProbabilityDistortion::piecewise_linear(std::move(knots));
  }
  if (fam == "composite") {
    expect_keys(j, {"family", "parts"}, "distortion");
    if (!j.contains("parts") || !j.at("parts").is_array())
      throw ConfigError("composite distortion needs array 'parts'");
    std::vector<std::pair<double, distlat::ProbabilityDistortion>> parts;
    for (const auto& p : j.at("parts")) {
      expect_keys(p, {"weight", "distortion"}, "composite part");
      parts.emplace_back(need_number(p, "weight", "composite part"),
                         parse_probability_distortion(p.at("distortion")));
    }
    return distlat::ProbabilityDistortion::composite(std::move(parts));
  }
  throw ConfigError("unknown probability distortion family '" + fam + "'");
}

struct DistortionSpec {
  std::optional<distlat::ProbabilityDistortion> fixed;
  std::optional<distlat::ScalingFamily> family;
};

DistortionSpec parse_distortion(const json& j) {
  const std::string fam = need_string(j, "family", "distortion");
  DistortionSpec out;
  if (fam == "sqrt_brownian") {
    expect_keys(j, {"family", "psi1", "sigma"}, "distortion");
    out.family = distlat::ScalingFamily::sqrt_brownian(
        parse_probability_distortion(j.at("psi1")), need_number(j, "sigma", "distortion"));
    return out;
  }
  if (fam == "general_example") {
    expect_keys(j, {"family", "psi1", "psi2", "psi3", "sigma"}, "distortion");
    out.family = distlat::ScalingFamily::general_example(
        parse_probability_distortion(j.at("psi1")), parse_probability_distortion(j.at("psi2")),
        parse_probability_distortion(j.at("psi3")), need_number(j, "sigma", "distortion"));
    return out;
  }
  if (fam == "convex_cgmy") {
    expect_keys(j, {"family", "gamma"}, "distortion");
    out.family = distlat::ScalingFamily::convex_cgmy(need_number(j, "gamma", "distortion"));
    return out;
  }
  out.fixed = parse_probability_distortion(j);
  return out;
}

distlat::Payoff parse_payoff(const json& j) {
  const std::string type = need_string(j, "type", "payoff");
  if (type == "call") {
    expect_keys(j, {"type", "S0", "K"}, "payoff");
    return distlat::Payoff::terminal_call(need_number(j, "S0", "payoff"),
                                          need_number(j, "K", "payoff"));
  }
  if (type == "digital") {
    expect_keys(j, {"type", "S0", "K"}, "payoff");
    return distlat::Payoff::terminal_digital(need_number(j, "S0", "payoff"),
                                             need_number(j, "K", "payoff"));
  }
  if (type == "table") {
    expect_keys(j, {"type", "values"}, "payoff");
    if (!j.contains("values") || !j.at("values").is_object())
      throw ConfigError("table payoff needs object 'values' keyed by lattice position");
    std::map<long, double> table;
    for (const auto& [key, val] : j.at("values").items()) {
      std::size_t pos = 0;
      long k = 0;
      try {
        k = std::stol(key, &pos);
      } catch (const std::exception&) {
        throw ConfigError("table payoff key '" + key + "' is not an integer position");
      }
      if (pos != key.size()) throw ConfigError("table payoff key '" + key + "' is not an integer");
      if (!val.is_number()) throw ConfigError("table payoff values must be numbers");
      table[k] = val.get<double>();
    }
    return distlat::Payoff::terminal_table(std::move(table));
  }
  if (type == "up_in_digital") {
    expect_keys(j, {"type", "S0", "H"}, "payoff");
    return distlat::Payoff::up_in_digital(need_number(j, "S0", "payoff"),
                                          need_number(j, "H", "payoff"));
  }
  if (type == "up_in_call") {
    expect_keys(j, {"type", "S0", "H", "K"}, "payoff");
    return distlat::Payoff::up_in_call(need_number(j, "S0", "payoff"),
                                       need_number(j, "H", "payoff"),
                                       need_number(j, "K", "payoff"));
  }
  throw ConfigError("unknown payoff type '" + type + "'");
}

distlat::SubordinatorSpec parse_subordinator(const json& j, const std::string& where) {
  const std::string type = need_string(j, "type", where);
  if (type == "scaled_exponential") {
    expect_keys(j, {"type", "rate", "mass"}, where);
    return distlat::SubordinatorSpec::scaled_exponential(need_number(j, "rate", where),
                                                         need_number(j, "mass", where));
  }
  if (type == "tabulated") {
    expect_keys(j, {"type", "knots"}, where);
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : j.at("knots")) {
      if (!k.is_array() || k.size() != 2) throw ConfigError("each knot must be [x, tail]");
      knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
    }
    return distlat::SubordinatorSpec::tabulated(std::move(knots));
  }
  if (type == "null") {
    expect_keys(j, {"type"}, where);
    return distlat::SubordinatorSpec::null();
  }
  throw ConfigError("unknown subordinator type '" + type + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_out(const std::string& csv_path, const std::string& content) {
  if (csv_path.empty()) {
    std::fputs(content.c_str(), stdout);
    return;
  }
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + csv_path + "'");
  out << content;
}

struct Cli {
  std::string command;
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
};

int run(const Cli& cli) {
  json cfg;
  {
    std::ifstream in(cli.config_path);
    if (!in) throw ConfigError("cannot open config file '" + cli.config_path + "'");
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  expect_keys(cfg,
              {"command", "seed", "model", "distortion", "payoff", "grid", "reference", "output",
               "coupling"},
              "config");
  if (cfg.contains("command")) {
    const std::string c = cfg.at("command").get<std::string>();
    if (c != cli.command)
      throw ConfigError("config command '" + c + "' does not match subcommand '" + cli.command +
                        "'");
  }
  std::uint64_t seed = 42;
  if (cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
  if (cli.seed) seed = *cli.seed;
  std::string csv_path;
  if (cfg.contains("output")) {
    expect_keys(cfg.at("output"), {"csv_path"}, "output");
    csv_path = cfg.at("output").value("csv_path", "");
  }
  if (!cli.out_path.empty()) csv_path = cli.out_path;

  if (cli.command == "check") {
    const auto results = distlat::run_all_checks(seed);
    bool all = true;
    for (const auto& r : results) {
      std::printf("%s  %s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                  r.detail.empty() ? "" : ("  -- " + r.detail).c_str());
      all = all && r.pass;
    }
    return all ? 0 : 1;
  }

  if (cli.command == "couple") {
    if (!cfg.contains("coupling")) throw ConfigError("couple command needs a 'coupling' section");
    const json& cj = cfg.at("coupling");
    expect_keys(cj, {"nu1", "nu2", "T", "n_paths"}, "coupling");
    const auto nu1 = parse_subordinator(cj.at("nu1"), "coupling.nu1");
    const auto nu2 = parse_subordinator(cj.at("nu2"), "coupling.nu2");
    const double T = need_number(cj, "T", "coupling");
    const auto n_paths = static_cast<std::size_t>(need_number(cj, "n_paths", "coupling"));
    const auto paths = distlat::couple_subordinators(nu1, nu2, T, n_paths, seed);
    const auto m1 = distlat::marginal_check(paths, 1, nu1);
    const auto m2 = distlat::marginal_check(paths, 2, nu2);
    std::ostringstream os;
    os << "n_paths,dominated,mean1,expected_mean1,z1,mean2,expected_mean2,z2\n"
       << n_paths << ',' << paths.n_dominated() << ',' << fmt(m1.sample_mean) << ','
       << fmt(m1.expected_mean) << ',' << fmt(m1.mean_z) << ',' << fmt(m2.sample_mean) << ','
       << fmt(m2.expected_mean) << ',' << fmt(m2.mean_z) << '\n';
    write_out(csv_path, os.str());
    const bool ok = paths.n_dominated() == n_paths && m1.pass && m2.pass;
    std::printf("domination: %zu/%zu paths; marginal z-scores %.3f / %.3f -> %s\n",
                paths.n_dominated(), n_paths, m1.mean_z, m2.mean_z, ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
  }

  // price / converge need the full model stack
  for (const char* key : {"model", "distortion", "payoff", "grid"})
    if (!cfg.contains(key))
      throw ConfigError(std::string("command '") + cli.command + "' needs section '" + key + "'");
  const auto model = parse_model(cfg.at("model"));
  const auto dist = parse_distortion(cfg.at("distortion"));
  const auto payoff = parse_payoff(cfg.at("payoff"));
  const json& gj = cfg.at("grid");
  expect_keys(gj, {"T", "n_steps", "n_list", "eps_trunc", "a_override"}, "grid");
  const double T = need_number(gj, "T", "grid");
  const double eps = gj.contains("eps_trunc") ? need_number(gj, "eps_trunc", "grid") : 1e-10;
  std::optional<int> a_override;
  if (gj.contains("a_override"))
    a_override = static_cast<int>(need_number(gj, "a_override", "grid"));

  const auto value_at = [&](int n) {
    const auto grid = distlat::make_grid(model, T, n, eps, a_override);
    return dist.fixed ? distlat::distorted_value(model, *dist.fixed, payoff, grid)
                      : distlat::distorted_value(model, *dist.family, payoff, grid);
  };

  if (cli.command == "price") {
    if (!gj.contains("n_steps")) throw ConfigError("price command needs grid.n_steps");
    const int n = static_cast<int>(need_number(gj, "n_steps", "grid"));
    const auto grid = distlat::make_grid(model, T, n, eps, a_override);
    const auto r = value_at(n);
    std::ostringstream os;
    os << "n,delta,h,a,value,truncated_mass,runtime_ms\n"
       << n << ',' << fmt(grid.delta) << ',' << fmt(grid.h) << ',' << grid.a << ','
       << fmt(r.value) << ',' << fmt(r.truncated_mass) << ',' << fmt(r.runtime_ms) << '\n';
    write_out(csv_path, os.str());
    return 0;
  }

  if (cli.command == "converge") {
    if (!gj.contains("n_list") || !gj.at("n_list").is_array())
      throw ConfigError("converge command needs grid.n_list");
    const auto n_list = gj.at("n_list").get<std::vector<int>>();
    std::optional<double> reference;
    if (cfg.contains("reference")) reference = cfg.at("reference").get<double>();
    std::vector<distlat::SweepRow> rows;
    if (dist.fixed)
      rows = distlat::convergence_sweep(model, *dist.fixed, payoff, n_list, T, eps, reference);
    else
      rows = distlat::convergence_sweep(model, *dist.family, payoff, n_list, T, eps, reference);
    std::ostringstream os;
    os << "n,delta,h,a,value,reference,gap,truncated_mass,runtime_ms\n";
    for (const auto& r : rows) {
      os << r.n << ',' << fmt(r.delta) << ',' << fmt(r.h) << ',' << r.a << ',' << fmt(r.value)
         << ',' << fmt(r.reference) << ',' << fmt(r.gap) << ',' << fmt(r.truncated_mass) << ','
         << fmt(r.runtime_ms) << '\n';
    }
    write_out(csv_path, os.str());
    return 0;
  }
  throw ConfigError("unknown command '" + cli.command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distorted-expectation lattice valuation"};
  app.require_subcommand(1);
  Cli cli;
  for (const char* name : {"price", "converge", "check", "couple"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", cli.config_path, "JSON run configuration")->required();
    sub->add_option("--out", cli.out_path, "CSV output path (overrides config)");
    sub->add_option("--seed", cli.seed, "seed override");
    sub->callback([&cli, name]() { cli.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return run(cli);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const distlat::InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  }
}
