#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "csa/csa_model.hpp"
#include "csa/ctmc.hpp"
#include "csa/errors.hpp"
#include "csa/graph.hpp"
#include "csa/growth.hpp"
#include "csa/parallel.hpp"
#include "csa/point_process.hpp"
#include "csa/spatial.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const char* const kVersion = CSA_TOOLKIT_VERSION;

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw csa::ConfigError("bad number '" + cell + "' in " + what);
    }
  }
  if (out.empty()) throw csa::ConfigError(what + " is empty");
  return out;
}

csa::Domain parse_domain(const std::string& text) {
  const auto v = parse_list(text, "--domain");
  if (v.size() % 2 != 0) throw csa::ConfigError("--domain needs lo,hi pairs, one per dimension");
  std::vector<double> lo, hi;
  for (std::size_t i = 0; i < v.size(); i += 2) {
    lo.push_back(v[i]);
    hi.push_back(v[i + 1]);
  }
  try {
    return csa::Domain(lo, hi);
  } catch (const csa::InvalidArgument& e) {
    throw csa::ConfigError(e.what());
  }
}

csa::Graph parse_graph(const std::string& spec) {
  try {
    return csa::parse_graph_spec(spec);
  } catch (const csa::InvalidArgument& e) {
    throw csa::ConfigError(e.what());
  }
}

csa::RateVariant parse_variant(const std::string& s) {
  if (s == "X") return csa::RateVariant::X;
  if (s == "Y") return csa::RateVariant::Y;
  throw csa::ConfigError("--variant must be X or Y");
}

csa::PpParams parse_pp_rule(const std::string& spec, double radius) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw csa::ConfigError("--rule must be kind:values, e.g. strauss:2.0,0.5");
  const std::string kind = spec.substr(0, colon);
  const auto v = parse_list(spec.substr(colon + 1), "--rule");
  auto need = [&](std::size_t n) {
    if (v.size() != n) throw csa::ConfigError("--rule " + kind + " takes " + std::to_string(n) + " value(s)");
  };
  if (kind == "strauss") {
    need(2);
    return {radius, csa::Strauss{v[0], v[1]}};
  }
  if (kind == "poisson") {
    need(1);
    return {radius, csa::ConstantBeta{v[0]}};
  }
  if (kind == "hardcore") {
    need(1);
    return csa::hard_core(radius, v[0]);
  }
  if (kind == "table") return {radius, csa::FiniteTable{v}};
  throw csa::ConfigError("unknown rule '" + kind + "' (strauss, poisson, hardcore, table)");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Resolved option values of a subcommand, flags over config-file over defaults.
json resolved_config(const CLI::App& sub) {
  json cfg;
  cfg["command"] = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->get_expected_max() == 0) {
      cfg[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      cfg[name] = opt->results().back();
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

class Output {
 public:
  Output(fs::path dir, json config) : dir_(std::move(dir)), config_(std::move(config)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw csa::IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  // CSV files start with '#' lines holding the version and the config.
  std::ofstream csv(const std::string& name) const {
    std::ofstream out = open(name);
    out << "# csa_toolkit " << kVersion << '\n';
    out << "# config " << config_.dump() << '\n';
    return out;
  }

  void write_json(const std::string& name, json body) const {
    json doc;
    doc["version"] = kVersion;
    doc["config"] = config_;
    for (auto& [k, v] : body.items()) doc[k] = v;
    std::ofstream out = open(name);
    out << doc.dump(2) << '\n';
  }

  const fs::path& dir() const { return dir_; }

 private:
  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw csa::IoError("cannot write " + (dir_ / name).string());
    return out;
  }

  fs::path dir_;
  json config_;
};

json classification_json(const csa::Classification& c) {
  json j;
  j["verdict"] = csa::to_string(c.verdict);
  j["case"] = c.case_label;
  j["lambda1"] = c.lambda1;
  j["kappa"] = c.kappa ? json(*c.kappa) : json(nullptr);
  j["min_degree"] = c.min_degree;
  j["basis"] = c.basis;
  j["inherited"] = c.inherited;
  return j;
}

std::vector<double> grid_values(double lo, double hi, std::size_t steps) {
  std::vector<double> v;
  for (std::size_t i = 0; i < steps; ++i) {
    v.push_back(steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
  }
  return v;
}

// Config file entries become flags placed right after the subcommand name, so
// anything given on the command line (parsed later) takes precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::ifstream in(path);
  if (!in) throw csa::ConfigError("cannot open config file " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw csa::ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw csa::ConfigError("config file must hold a JSON object");
  std::vector<std::string> injected;
  for (auto& [key, value] : cfg.items()) {
    if (key == "command") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
      continue;
    }
    injected.push_back("--" + key);
    injected.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative sequential adsorption and interacting particle toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::uint64_t seed = csa::Rng::kDefaultSeed;
  std::string out_dir = "out";
  std::string config_path;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--config", config_path, "JSON config file; flags override it");
  };

  // simulate-csa
  double csa_radius = 0.0;
  std::string csa_beta, csa_domain = "0,1,0,1";
  std::size_t csa_points = 0, csa_streak = 10'000'000;
  auto* sim_csa = app.add_subcommand("simulate-csa", "Sample a CSA arrival sequence");
  sim_csa->add_option("--radius", csa_radius, "Interaction radius R")->required();
  sim_csa->add_option("--beta", csa_beta, "Rate table beta_0,beta_1,...,beta_N")->required();
  sim_csa->add_option("--points", csa_points, "Number of points")->required();
  sim_csa->add_option("--domain", csa_domain, "Box as lo,hi per dimension");
  sim_csa->add_option("--max-streak", csa_streak, "Rejections treated as jamming");
  common(sim_csa);

  // fit-csa
  std::string fit_input;
  std::size_t fit_mc = 20'000;
  double fit_tol = 1e-6;
  auto* fit_csa = app.add_subcommand("fit-csa", "Maximum likelihood fit of beta from a point sequence");
  fit_csa->add_option("--input", fit_input, "Point CSV in arrival order")->required();
  fit_csa->add_option("--radius", csa_radius, "Interaction radius R")->required();
  fit_csa->add_option("--domain", csa_domain, "Box as lo,hi per dimension");
  fit_csa->add_option("--mc-samples", fit_mc, "Monte Carlo points for Gamma");
  fit_csa->add_option("--tol", fit_tol, "Score residual tolerance");
  common(fit_csa);

  // graph-based commands
  std::string graph_spec;
  double alpha = 0.0, beta = 0.0;
  std::uint64_t steps = 0, thin = 1, window = 0;
  auto* sim_growth = app.add_subcommand("simulate-growth", "Discrete-time growth on a graph");
  sim_growth->add_option("--graph", graph_spec, "cycle:n, star:m, path:n, complete:n or file:path")->required();
  sim_growth->add_option("--alpha", alpha)->required();
  sim_growth->add_option("--beta", beta)->required();
  sim_growth->add_option("--steps", steps)->required();
  sim_growth->add_option("--thin", thin, "Keep every thin-th state");
  sim_growth->add_option("--window", window, "Localisation window; 0 uses the last 20%");
  common(sim_growth);

  std::size_t cycle_m = 4;
  auto* sim_min = app.add_subcommand("simulate-min-rule", "Min rule on a cycle");
  sim_min->add_option("--m", cycle_m, "Cycle length (>= 3)");
  sim_min->add_option("--steps", steps)->required();
  sim_min->add_option("--thin", thin, "Keep every thin-th state");
  sim_min->add_option("--window", window, "Final window; 0 uses the last 20%");
  common(sim_min);

  std::string variant = "X";
  auto* classify_cmd = app.add_subcommand("classify-ctmc", "Recurrence/transience/explosion verdict");
  classify_cmd->add_option("--graph", graph_spec)->required();
  classify_cmd->add_option("--alpha", alpha)->required();
  classify_cmd->add_option("--beta", beta)->required();
  classify_cmd->add_option("--variant", variant, "X or Y");
  common(classify_cmd);

  std::uint64_t cap = 0, event_cap = 1'000'000, ctmc_thin = 0;
  double t_max = 100.0;
  std::string x0_text;
  auto* sim_ctmc = app.add_subcommand("simulate-ctmc", "Gillespie simulation of the particle CTMC");
  sim_ctmc->add_option("--graph", graph_spec)->required();
  sim_ctmc->add_option("--alpha", alpha)->required();
  sim_ctmc->add_option("--beta", beta)->required();
  sim_ctmc->add_option("--variant", variant, "X or Y");
  sim_ctmc->add_option("--cap", cap, "Per-vertex cap N; 0 for none");
  sim_ctmc->add_option("--t-max", t_max, "Time horizon");
  sim_ctmc->add_option("--event-cap", event_cap, "Maximum number of jumps");
  sim_ctmc->add_option("--thin", ctmc_thin, "Record every thin-th jump; 0 records start and end only");
  sim_ctmc->add_option("--x0", x0_text, "Initial occupancy, comma separated; default all zero");
  common(sim_ctmc);

  auto* stat_cmd = app.add_subcommand("stationary-finite", "Exact stationary law of the capped chain");
  stat_cmd->add_option("--graph", graph_spec)->required();
  stat_cmd->add_option("--alpha", alpha)->required();
  stat_cmd->add_option("--beta", beta)->required();
  stat_cmd->add_option("--cap", cap, "Per-vertex cap N")->required();
  common(stat_cmd);

  std::string pp_rule, pp_domain = "0,1,0,1";
  double pp_radius = 0.0;
  double pp_moves = 0;
  std::uint64_t pp_trace_thin = 100;
  auto* pp_cmd = app.add_subcommand("sample-pp", "Birth-death MCMC sample of the point process");
  pp_cmd->add_option("--rule", pp_rule, "strauss:a,gamma | poisson:b | hardcore:b | table:b0,b1,...")->required();
  pp_cmd->add_option("--radius", pp_radius, "Interaction radius R")->required();
  pp_cmd->add_option("--moves", pp_moves, "Number of MCMC moves")->required();
  pp_cmd->add_option("--domain", pp_domain, "Box as lo,hi per dimension");
  pp_cmd->add_option("--trace-thin", pp_trace_thin, "Record |x| every this many moves");
  common(pp_cmd);

  double a_min = -2.0, a_max = 0.0, b_min = 0.0, b_max = 2.0;
  std::size_t a_steps = 0, b_steps = 0;
  bool evidence = false;
  unsigned threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Classification over an (alpha, beta) grid");
  sweep_cmd->add_option("--graph", graph_spec)->required();
  sweep_cmd->add_option("--alpha-min", a_min);
  sweep_cmd->add_option("--alpha-max", a_max);
  sweep_cmd->add_option("--alpha-steps", a_steps, "Grid points in alpha (endpoints included)");
  sweep_cmd->add_option("--beta-min", b_min);
  sweep_cmd->add_option("--beta-max", b_max);
  sweep_cmd->add_option("--beta-steps", b_steps, "Grid points in beta (endpoints included)");
  sweep_cmd->add_option("--variant", variant, "X or Y");
  sweep_cmd->add_flag("--evidence", evidence, "Add a simulation per cell");
  sweep_cmd->add_option("--t-max", t_max, "Simulation horizon for --evidence");
  sweep_cmd->add_option("--event-cap", event_cap, "Jump cap for --evidence");
  sweep_cmd->add_option("--threads", threads, "Worker threads; 0 uses all cores");
  common(sweep_cmd);

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const csa::ConfigError& e) {
    std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    const Output out(out_dir, resolved_config(*sub));
    csa::Rng rng(seed);

    if (sub == sim_csa) {
      const csa::Domain domain = parse_domain(csa_domain);
      const auto params = csa::CsaParams::from_table(csa_radius, parse_list(csa_beta, "--beta"));
      csa::SamplerOptions opts;
      opts.max_rejection_streak = csa_streak;
      const csa::PointSeq seq = csa::sample_csa(params, domain, csa_points, rng, opts);
      auto f = out.csv("points.csv");
      csa::write_points_csv(f, seq);
      const auto counts = csa::arrival_neighbour_counts(seq, csa_radius);
      const auto ts = csa::t_statistics(seq, csa_radius, params.max_neighbours());
      out.write_json("summary.json", {{"points", seq.size()},
                                      {"max_arrival_neighbours", csa::estimate_N(seq, csa_radius)},
                                      {"t", ts.t},
                                      {"overflow", ts.overflow}});
    } else if (sub == fit_csa) {
      const csa::Domain domain = parse_domain(csa_domain);
      const csa::PointSeq seq = csa::read_points_csv(fit_input);
      const csa::FitResult fit = csa::fit_mle(seq, domain, csa_radius, fit_mc, rng, fit_tol);
      std::vector<double> se;
      for (const auto& row : fit.stats.gamma_se) {
        double m = 0.0;
        for (double s : row) m = std::max(m, s);
        se.push_back(m);
      }
      out.write_json("fit.json", {{"R", csa_radius},
                                  {"N_hat", fit.n_hat},
                                  {"beta_hat", fit.beta_hat},
                                  {"residuals", fit.residuals},
                                  {"t", fit.stats.t},
                                  {"gamma_mc_se_max", se},
                                  {"method", fit.method},
                                  {"iterations", fit.iterations},
                                  {"seed", seed},
                                  {"mc_n", fit_mc}});
    } else if (sub == sim_growth) {
      const csa::Graph g = parse_graph(graph_spec);
      csa::GrowthOptions opts;
      opts.thin = thin;
      const auto traj = csa::simulate_growth(g, alpha, beta, csa::Counts(g.num_vertices(), 0), steps, rng, opts);
      auto f = out.csv("trajectory.csv");
      csa::write_trajectory_csv(f, traj);
      const auto rep = csa::detect_localisation(traj, g, window == 0 ? csa::default_window(traj) : window);
      json ratios = json::array();
      for (const auto& [vu, r] : rep.ratio_estimates) ratios.push_back({{"v", vu.first}, {"u", vu.second}, {"log_ratio", r}});
      out.write_json("localisation.json", {{"final_set", rep.final_set},
                                           {"is_maximal_clique", rep.is_maximal_clique},
                                           {"window", rep.window},
                                           {"log_count_ratios", ratios},
                                           {"final_counts", traj.final_state().counts}});
    } else if (sub == sim_min) {
      csa::GrowthOptions opts;
      opts.thin = thin;
      const auto traj = csa::simulate_min_rule(cycle_m, csa::Counts(cycle_m, 0), steps, rng, opts);
      auto f = out.csv("trajectory.csv");
      csa::write_trajectory_csv(f, traj);
      csa::Graph cycle = csa::make_family(csa::GraphFamily::Cycle, cycle_m);
      const auto rep = csa::detect_localisation(traj, cycle, window == 0 ? csa::default_window(traj) : window);
      out.write_json("summary.json", {{"final_set", rep.final_set},
                                      {"window", rep.window},
                                      {"final_counts", traj.final_state().counts}});
    } else if (sub == classify_cmd) {
      const csa::Graph g = parse_graph(graph_spec);
      const json c = classification_json(csa::classify(alpha, beta, g, parse_variant(variant)));
      out.write_json("classification.json", c);
      std::cout << c.dump() << '\n';
    } else if (sub == sim_ctmc) {
      csa::CtmcParams params{alpha, beta, parse_graph(graph_spec), parse_variant(variant), std::nullopt};
      if (cap > 0) params.cap = cap;
      csa::Occupancy x0(params.graph.num_vertices(), 0);
      if (!x0_text.empty()) {
        const auto v = parse_list(x0_text, "--x0");
        if (v.size() != x0.size()) throw csa::ConfigError("--x0 needs one entry per vertex");
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (v[i] < 0 || v[i] != std::floor(v[i])) throw csa::ConfigError("--x0 entries must be nonnegative integers");
          x0[i] = static_cast<std::uint64_t>(v[i]);
        }
      }
      csa::CtmcOptions opts;
      opts.thin = ctmc_thin == 0 ? event_cap + 1 : ctmc_thin;
      const csa::CtmcRun run = csa::simulate_ctmc(params, x0, t_max, event_cap, rng, opts);
      auto f = out.csv("trajectory.csv");
      csa::write_ctmc_trajectory_csv(f, run, x0.size());
      out.write_json("run.json", {{"outcome", csa::to_string(run.outcome)},
                                  {"t_reached", run.t_reached},
                                  {"events", run.events},
                                  {"origin_visits", run.origin_visits},
                                  {"max_log_total_rate", run.max_log_total_rate},
                                  {"basis", run.basis}});
    } else if (sub == stat_cmd) {
      csa::CtmcParams params{alpha, beta, parse_graph(graph_spec), csa::RateVariant::X, cap};
      const csa::StationaryTable table = csa::stationary_finite(params);
      auto f = out.csv("stationary.csv");
      f << "index";
      for (std::size_t v = 0; v < table.num_vertices; ++v) f << ",x_" << v;
      f << ",probability\n";
      for (std::size_t i = 0; i < table.size(); ++i) {
        f << i;
        for (auto c : table.state(i)) f << ',' << c;
        f << ',' << fmt(table.probability[i]) << '\n';
      }
      json body{{"states", table.size()}, {"log_Z", table.log_Z}};
      if (table.size() <= 100'000) {
        body["tv_vs_generator"] = csa::total_variation(table.probability, csa::generator_stationary(params));
      }
      const auto cov = csa::occupancy_covariance(table);
      body["covariance"] = cov;
      out.write_json("summary.json", body);
    } else if (sub == pp_cmd) {
      const csa::Domain domain = parse_domain(pp_domain);
      const csa::PpParams params = parse_pp_rule(pp_rule, pp_radius);
      const auto verdict = csa::validate_params(params);
      if (!verdict.ok) throw csa::ConfigError("--rule rejected: " + verdict.reason);
      if (!(pp_moves >= 1) || pp_moves != std::floor(pp_moves)) throw csa::ConfigError("--moves must be a positive integer");
      csa::PpOptions opts;
      opts.trace_thin = pp_trace_thin;
      const auto sample = csa::sample_bd_mcmc(params, domain, static_cast<std::uint64_t>(pp_moves), rng, opts);
      auto f = out.csv("points.csv");
      csa::write_points_csv(f, sample.config.points());
      const auto& d = sample.diagnostics;
      out.write_json("sample.json", {{"rule", params.rule_name()},
                                     {"params", pp_rule},
                                     {"radius", pp_radius},
                                     {"n_moves", static_cast<std::uint64_t>(pp_moves)},
                                     {"seed", seed},
                                     {"acceptance_rates", {{"birth", d.birth_acceptance()}, {"death", d.death_acceptance()}}},
                                     {"final_size", sample.config.size()},
                                     {"geweke_z", d.geweke_z}});
      auto trace = out.csv("size_trace.csv");
      trace << "move,size\n";
      for (std::size_t i = 0; i < d.size_trace.size(); ++i) trace << (i + 1) * pp_trace_thin << ',' << d.size_trace[i] << '\n';
    } else if (sub == sweep_cmd) {
      const csa::Graph g = parse_graph(graph_spec);
      const csa::RateVariant rv = parse_variant(variant);
      const auto alphas = grid_values(a_min, a_max, a_steps);
      const auto betas = grid_values(b_min, b_max, b_steps);
      const std::size_t cells = alphas.size() * betas.size();
      const auto rows = csa::parallel_map(
          cells,
          [&](std::size_t i) {
            const double a = alphas[i / betas.size()], b = betas[i % betas.size()];
            const csa::Classification c = csa::classify(a, b, g, rv);
            std::string row = fmt(a) + ',' + fmt(b) + ',' + csa::to_string(c.verdict) + ",\"" + c.case_label + "\"";
            if (evidence) {
              csa::Rng cell_rng = rng.split(i);
              const csa::CtmcParams params{a, b, g, rv, std::nullopt};
              const csa::CtmcRun run =
                  csa::simulate_ctmc(params, csa::Occupancy(g.num_vertices(), 0), t_max, event_cap, cell_rng);
              row += ',' + csa::to_string(run.outcome) + ',' + fmt(run.t_reached) + ',' + std::to_string(run.events) +
                     ',' + std::to_string(run.origin_visits);
            }
            return row;
          },
          threads);
      auto f = out.csv("sweep.csv");
      f << "alpha,beta,verdict,case";
      if (evidence) f << ",outcome,t_reached,events,origin_visits";
      f << '\n';
      for (const auto& r : rows) f << r << '\n';
    }
    return 0;
  } catch (const csa::ConfigError& e) {
    std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const csa::Error& e) {
    std::cerr << json{{"error", e.kind()}, {"message", e.what()}, {"command", sub->get_name()}}.dump() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "RuntimeError"}, {"message", e.what()}, {"command", sub->get_name()}}.dump() << '\n';
    return 3;
  }
}
