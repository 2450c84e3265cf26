#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csa/graph.hpp"
#include "csa/rng.hpp"

namespace csa {

using Occupancy = std::vector<std::uint64_t>;

// X-rates: birth exp(alpha x_v + beta (A x)_v), death 1.
// Y-rates: birth exp(alpha x_v), death exp(-beta (A x)_v).
enum class RateVariant { X, Y };

struct CtmcParams {
  double alpha = 0.0;
  double beta = 0.0;
  Graph graph;
  RateVariant variant = RateVariant::X;
  // At most `cap` particles per vertex when set.
  std::optional<std::uint64_t> cap;

  void validate() const;
};

struct Transition {
  std::size_t vertex = 0;
  int delta = 0;  // +1 birth, -1 death
  double log_rate = 0.0;
  Occupancy target;

  double rate() const;
};

// log of the rate x -> x + delta e_v; -infinity when the move is not allowed.
double log_rate(const CtmcParams& params, const Occupancy& x, std::size_t v, int delta);

// Every transition with nonzero rate out of x.
std::vector<Transition> rates(const CtmcParams& params, const Occupancy& x);

// (A x)_v.
std::uint64_t neighbour_sum(const Graph& g, const Occupancy& x, std::size_t v);

// Q(x) = -(alpha/2) sum x_v^2 - beta sum_{edges} x_v x_u.
double potential_Q(const CtmcParams& params, const Occupancy& x);
// S(x) = sum x_v.
double potential_S(const Occupancy& x);
// W(x) = (alpha/2) sum x_v (x_v - 1) + beta sum_{edges} x_v x_u; e^W is invariant.
double potential_W(const CtmcParams& params, const Occupancy& x);

using LogRateFn = std::function<double(const Occupancy& x, std::size_t v, int delta)>;

// |W(x) + log r(x, x+e_v) - W(x+e_v) - log r(x+e_v, x)|, using the given rate
// function. Throws InvalidArgument if x -> x + e_v is not admissible.
double detailed_balance_residual(const CtmcParams& params, const Occupancy& x, std::size_t v,
                                 const LogRateFn& log_rate_fn);
double check_detailed_balance(const CtmcParams& params, const Occupancy& x, std::size_t v);

enum class CtmcOutcome { CompletedHorizon, EventCapHit };

struct CtmcSnapshot {
  double time = 0.0;
  Occupancy state;
};

struct CtmcRun {
  CtmcOutcome outcome = CtmcOutcome::CompletedHorizon;
  double t_reached = 0.0;
  std::uint64_t events = 0;
  // Number of jumps into the all-zero state.
  std::uint64_t origin_visits = 0;
  // Largest log total jump rate seen; unbounded growth signals explosion.
  double max_log_total_rate = 0.0;
  std::vector<CtmcSnapshot> trajectory;
  // Explosion verdicts from simulation are evidence, never theorems.
  std::string basis = "evidence";
};

struct CtmcOptions {
  // Record every `thin`-th jump (plus the start and the end); 0 records none.
  std::uint64_t thin = 0;
};

// Gillespie simulation up to time t_max or event_cap jumps, whichever first.
CtmcRun simulate_ctmc(const CtmcParams& params, const Occupancy& x0, double t_max,
                      std::uint64_t event_cap, Rng& rng, const CtmcOptions& options = {});

// Time spent in each state of a capped chain, normalized to a distribution
// over the mixed-radix state index (vertex 0 least significant).
std::vector<double> occupation_frequencies(const CtmcParams& params, const Occupancy& x0,
                                           double t_max, Rng& rng);

enum class Verdict {
  PositiveRecurrent,
  NullRecurrent,
  TransientNonExplosive,
  TransientExplosive,
  TransientExplosivityUnknown,
};

std::string to_string(Verdict v);
std::string to_string(CtmcOutcome o);
std::string to_string(RateVariant v);

struct Classification {
  Verdict verdict = Verdict::PositiveRecurrent;
  std::string case_label;
  double lambda1 = 0.0;
  std::optional<std::size_t> kappa;
  std::size_t min_degree = 0;
  // "theorem", or "theorem (inherited from X-rates)" for the Y variant.
  std::string basis = "theorem";
  bool inherited = false;
};

inline constexpr double kBoundaryTolerance = 1e-9;

// Long-term behaviour from the recurrence/transience/explosion theorems.
// Requires a connected graph.
Classification classify(double alpha, double beta, const Graph& g,
                        RateVariant variant = RateVariant::X, double boundary_tol = kBoundaryTolerance);

// Exact stationary law of the capped chain on {0..N}^V.
struct StationaryTable {
  std::size_t num_vertices = 0;
  std::uint64_t cap = 0;
  std::vector<double> probability;
  double log_Z = 0.0;

  std::size_t size() const { return probability.size(); }
  Occupancy state(std::size_t index) const;
  std::size_t index(const Occupancy& x) const;
};

inline constexpr std::size_t kMaxEnumeratedStates = 10'000'000;

// Normalized e^W over {0..N}^V. Throws StateSpaceTooLarge above max_states.
StationaryTable stationary_finite(const CtmcParams& params, std::size_t max_states = kMaxEnumeratedStates);

// Independent route: solves the global-balance equations pi G = 0, sum pi = 1
// of the capped generator with a sparse LU factorization.
std::vector<double> generator_stationary(const CtmcParams& params, std::size_t max_states = 200'000);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

// Law of x_v on {0..N} given the other coordinates of x (x_v is ignored):
// p_k proportional to exp(alpha k (k-1) / 2 + k beta (A x)_v).
std::vector<double> conditional_site_law(const CtmcParams& params, const Occupancy& x, std::size_t v);

struct DominanceCheck {
  // Tail condition: sum_{i>=k} p_i <= sum_{i>=k} q_i for every k.
  bool dominated = false;
  // Likelihood-ratio premise: p_i q_j <= p_j q_i for all j < i.
  bool premise = false;
};

// Does q stochastically dominate p? Throws NotNormalized if either array is
// not a probability vector within 1e-9.
DominanceCheck stochastic_dominance(const std::vector<double>& p, const std::vector<double>& q);

struct MonotonicityReport {
  std::size_t pairs_checked = 0;
  std::size_t premise_failures = 0;
  std::size_t dominance_failures = 0;
  bool holds() const { return premise_failures == 0 && dominance_failures == 0; }
};

// For every vertex v and every comparable pair z <= y of configurations off
// v, compares the conditional law under `low` at z with the one under `high`
// at y. With low == high this is the monotonicity of the measure; with
// beta_low <= beta_high it is the Holley premise.
MonotonicityReport check_conditional_monotonicity(const CtmcParams& low, const CtmcParams& high,
                                                  std::size_t max_pairs = 50'000'000);

struct IncreasingStatistic {
  std::string name;
  std::function<double(const Occupancy&)> f;
};

// sum x_v, max x_v, and the indicator of x >= (1, ..., 1).
std::vector<IncreasingStatistic> default_increasing_statistics();

double expectation(const StationaryTable& table, const std::function<double(const Occupancy&)>& f);

// Covariance matrix of (x_v) under the table.
std::vector<std::vector<double>> occupancy_covariance(const StationaryTable& table);

struct StatisticComparison {
  std::string name;
  double expectation_low = 0.0;
  double expectation_high = 0.0;
  bool ordered = false;
};

struct BetaDominanceReport {
  std::vector<StatisticComparison> statistics;
  MonotonicityReport holley;
  bool all_ordered() const;
};

// Checks E_{beta_1}[f] <= E_{beta_2}[f] by exact enumeration for each f, and
// the Holley premise. Full dominance over all increasing events is not
// enumerated.
BetaDominanceReport verify_beta_dominance(const CtmcParams& low, const CtmcParams& high,
                                          const std::vector<IncreasingStatistic>& statistics =
                                              default_increasing_statistics(),
                                          std::size_t max_states = kMaxEnumeratedStates);

void write_ctmc_trajectory_csv(std::ostream& out, const CtmcRun& run, std::size_t num_vertices);

}  // namespace csa
