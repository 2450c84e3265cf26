#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "csa/graph.hpp"
#include "csa/rng.hpp"

namespace csa {

using Counts = std::vector<std::uint64_t>;

struct GrowthState {
  Counts counts;
  std::uint64_t step = 0;
};

// Snapshots of a growth trajectory, in increasing step order. The first
// snapshot is the initial state and the last one is always the final state.
struct GrowthTrajectory {
  std::vector<GrowthState> snapshots;

  const GrowthState& final_state() const { return snapshots.back(); }
  // Latest snapshot taken at or before `step`.
  const GrowthState& at_or_before(std::uint64_t step) const;
};

// P(next particle at v) proportional to exp(alpha x_v + beta sum_{u~v} x_u),
// evaluated with the maximum exponent subtracted.
std::vector<double> growth_step_distribution(const Graph& g, double alpha, double beta,
                                             const GrowthState& state);

struct GrowthOptions {
  // Keep every `thin`-th state (plus the first and the last).
  std::uint64_t thin = 1;
};

// The chain uses one uniform per step and inverse-CDF selection in vertex
// order, so two graphs whose step distributions coincide produce the same
// path from the same stream.
GrowthTrajectory simulate_growth(const Graph& g, double alpha, double beta, const Counts& x0,
                                 std::uint64_t n_steps, Rng& rng, const GrowthOptions& options = {});

struct LocalisationReport {
  std::vector<std::size_t> final_set;
  bool is_maximal_clique = false;
  // log(X_v / X_u) at the final step for v < u in final_set.
  std::map<std::pair<std::size_t, std::size_t>, double> ratio_estimates;
  std::uint64_t window = 0;
};

// Vertices that received particles during the last `window` steps.
// Throws WindowTooLarge unless the trajectory spans more than `window` steps.
LocalisationReport detect_localisation(const GrowthTrajectory& trajectory, const Graph& g,
                                       std::uint64_t window);

// Default window: the final 20% of the steps (at least one).
std::uint64_t default_window(const GrowthTrajectory& trajectory);

// lambda = -infinity rule on the m-cycle: the next particle goes to an argmin
// of x_{i-1} + x_i + x_{i+1}, ties broken uniformly at random.
GrowthTrajectory simulate_min_rule(std::size_t m, const Counts& x0, std::uint64_t n_steps, Rng& rng,
                                   const GrowthOptions& options = {});

// Step-by-step vertex choices of the min rule (length n_steps).
std::vector<std::size_t> min_rule_choices(std::size_t m, const Counts& x0, std::uint64_t n_steps,
                                          Rng& rng);

void write_trajectory_csv(std::ostream& out, const GrowthTrajectory& trajectory);

}  // namespace csa
