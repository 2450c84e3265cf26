#include "csa/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "csa/errors.hpp"

namespace csa {

const GrowthState& GrowthTrajectory::at_or_before(std::uint64_t step) const {
  auto it = std::upper_bound(snapshots.begin(), snapshots.end(), step,
                             [](std::uint64_t s, const GrowthState& st) { return s < st.step; });
  if (it == snapshots.begin()) throw InvalidArgument("no snapshot at or before the requested step");
  return *(it - 1);
}

namespace {

void check_state(const Graph& g, const Counts& counts) {
  if (counts.size() != g.num_vertices()) {
    throw DimensionMismatch("state has " + std::to_string(counts.size()) + " entries, graph has " +
                            std::to_string(g.num_vertices()) + " vertices");
  }
}

// exp(e_v - max e) into `weights`; returns their sum.
double growth_weights(const Graph& g, double alpha, double beta, const Counts& x,
                      std::vector<double>& weights) {
  const std::size_t n = g.num_vertices();
  weights.resize(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < n; ++v) {
    std::uint64_t around = 0;
    for (std::size_t u : g.neighbours(v)) around += x[u];
    weights[v] = alpha * static_cast<double>(x[v]) + beta * static_cast<double>(around);
    top = std::max(top, weights[v]);
  }
  double total = 0.0;
  for (double& w : weights) {
    w = std::exp(w - top);
    total += w;
  }
  return total;
}

}  // namespace

std::vector<double> growth_step_distribution(const Graph& g, double alpha, double beta,
                                             const GrowthState& state) {
  check_state(g, state.counts);
  if (g.num_vertices() == 0) throw InvalidArgument("graph has no vertices");
  std::vector<double> p;
  const double total = growth_weights(g, alpha, beta, state.counts, p);
  for (double& w : p) w /= total;
  return p;
}

GrowthTrajectory simulate_growth(const Graph& g, double alpha, double beta, const Counts& x0,
                                 std::uint64_t n_steps, Rng& rng, const GrowthOptions& options) {
  check_state(g, x0);
  if (g.num_vertices() == 0) throw InvalidArgument("graph has no vertices");
  const std::uint64_t thin = std::max<std::uint64_t>(1, options.thin);
  GrowthTrajectory traj;
  GrowthState state{x0, 0};
  traj.snapshots.push_back(state);
  std::vector<double> weights;
  for (std::uint64_t s = 1; s <= n_steps; ++s) {
    const double total = growth_weights(g, alpha, beta, state.counts, weights);
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = weights.size() - 1;
    for (std::size_t v = 0; v < weights.size(); ++v) {
      acc += weights[v];
      if (target < acc) {
        chosen = v;
        break;
      }
    }
    ++state.counts[chosen];
    state.step = s;
    if (s % thin == 0 || s == n_steps) traj.snapshots.push_back(state);
  }
  return traj;
}

std::uint64_t default_window(const GrowthTrajectory& trajectory) {
  const std::uint64_t span = trajectory.final_state().step - trajectory.snapshots.front().step;
  return std::max<std::uint64_t>(1, span / 5);
}

LocalisationReport detect_localisation(const GrowthTrajectory& trajectory, const Graph& g,
                                       std::uint64_t window) {
  if (trajectory.snapshots.empty()) throw InvalidArgument("empty trajectory");
  const GrowthState& last = trajectory.final_state();
  check_state(g, last.counts);
  if (window == 0) throw InvalidArgument("window must be positive");
  if (last.step - trajectory.snapshots.front().step <= window) {
    throw WindowTooLarge("window of " + std::to_string(window) + " steps does not fit in a trajectory of " +
                         std::to_string(last.step - trajectory.snapshots.front().step) + " steps");
  }
  const GrowthState& before = trajectory.at_or_before(last.step - window);
  LocalisationReport report;
  report.window = window;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    if (last.counts[v] > before.counts[v]) report.final_set.push_back(v);
  }
  const auto cliques = maximal_cliques(g);
  report.is_maximal_clique =
      std::find(cliques.begin(), cliques.end(), report.final_set) != cliques.end();
  for (std::size_t i = 0; i < report.final_set.size(); ++i) {
    for (std::size_t j = i + 1; j < report.final_set.size(); ++j) {
      const std::size_t v = report.final_set[i], u = report.final_set[j];
      report.ratio_estimates[{v, u}] =
          std::log(static_cast<double>(last.counts[v])) - std::log(static_cast<double>(last.counts[u]));
    }
  }
  return report;
}

namespace {

template <typename OnStep>
void run_min_rule(std::size_t m, Counts& x, std::uint64_t n_steps, Rng& rng, OnStep&& on_step) {
  if (m < 3) throw BadSize("the min rule needs a cycle with at least 3 vertices");
  if (x.size() != m) throw DimensionMismatch("initial state length differs from cycle size");
  std::vector<std::size_t> ties;
  ties.reserve(m);
  for (std::uint64_t s = 1; s <= n_steps; ++s) {
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    ties.clear();
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint64_t u = x[(i + m - 1) % m] + x[i] + x[(i + 1) % m];
      if (u < best) {
        best = u;
        ties.clear();
      }
      if (u == best) ties.push_back(i);
    }
    const std::size_t chosen = ties.size() == 1 ? ties[0] : ties[rng.uniform_int(ties.size())];
    ++x[chosen];
    on_step(s, chosen);
  }
}

}  // namespace

GrowthTrajectory simulate_min_rule(std::size_t m, const Counts& x0, std::uint64_t n_steps, Rng& rng,
                                   const GrowthOptions& options) {
  const std::uint64_t thin = std::max<std::uint64_t>(1, options.thin);
  GrowthTrajectory traj;
  GrowthState state{x0, 0};
  traj.snapshots.push_back(state);
  run_min_rule(m, state.counts, n_steps, rng, [&](std::uint64_t s, std::size_t) {
    state.step = s;
    if (s % thin == 0 || s == n_steps) traj.snapshots.push_back(state);
  });
  return traj;
}

std::vector<std::size_t> min_rule_choices(std::size_t m, const Counts& x0, std::uint64_t n_steps,
                                          Rng& rng) {
  Counts x = x0;
  std::vector<std::size_t> out;
  out.reserve(n_steps);
  run_min_rule(m, x, n_steps, rng, [&](std::uint64_t, std::size_t v) { out.push_back(v); });
  return out;
}

void write_trajectory_csv(std::ostream& out, const GrowthTrajectory& trajectory) {
  out << "step";
  const std::size_t n = trajectory.snapshots.empty() ? 0 : trajectory.snapshots.front().counts.size();
  for (std::size_t v = 0; v < n; ++v) out << ",v_" << v;
  out << '\n';
  for (const auto& s : trajectory.snapshots) {
    out << s.step;
    for (auto c : s.counts) out << ',' << c;
    out << '\n';
  }
}

}  // namespace csa
