#include "csa/ctmc.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "csa/errors.hpp"

namespace csa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_occupancy(const CtmcParams& params, const Occupancy& x) {
  if (x.size() != params.graph.num_vertices()) {
    throw DimensionMismatch("occupancy has " + std::to_string(x.size()) + " entries, graph has " +
                            std::to_string(params.graph.num_vertices()) + " vertices");
  }
  if (params.cap) {
    for (auto c : x) {
      if (c > *params.cap) throw InvalidArgument("occupancy exceeds the per-vertex cap");
    }
  }
}

std::uint64_t require_cap(const CtmcParams& params) {
  if (!params.cap) throw InvalidArgument("this operation needs a capped chain (cap N)");
  return *params.cap;
}

std::size_t state_count(const CtmcParams& params, std::size_t max_states) {
  const std::uint64_t base = require_cap(params) + 1;
  double total = 1.0;
  for (std::size_t v = 0; v < params.graph.num_vertices(); ++v) total *= static_cast<double>(base);
  if (total > static_cast<double>(max_states)) {
    throw StateSpaceTooLarge("(N+1)^n = " + std::to_string(total) + " exceeds the limit of " +
                             std::to_string(max_states) + " states");
  }
  return static_cast<std::size_t>(total);
}

long double potential_W_ld(const CtmcParams& params, const Occupancy& x) {
  long double self = 0.0L;
  for (auto c : x) {
    const auto xv = static_cast<long double>(c);
    self += xv * (xv - 1.0L);
  }
  long double pair = 0.0L;
  for (auto [u, w] : params.graph.edges()) {
    pair += static_cast<long double>(x[u]) * static_cast<long double>(x[w]);
  }
  return static_cast<long double>(params.alpha) * 0.5L * self + static_cast<long double>(params.beta) * pair;
}

}  // namespace

void CtmcParams::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw InvalidArgument("alpha and beta must be finite");
  if (cap && *cap < 1) throw InvalidArgument("cap must be at least 1");
  if (graph.num_vertices() == 0) throw InvalidArgument("graph has no vertices");
}

double Transition::rate() const { return std::exp(log_rate); }

std::uint64_t neighbour_sum(const Graph& g, const Occupancy& x, std::size_t v) {
  std::uint64_t s = 0;
  for (std::size_t u : g.neighbours(v)) s += x[u];
  return s;
}

double log_rate(const CtmcParams& params, const Occupancy& x, std::size_t v, int delta) {
  const auto xv = static_cast<double>(x[v]);
  if (delta > 0) {
    if (params.cap && x[v] >= *params.cap) return kNegInf;
    if (params.variant == RateVariant::Y) return params.alpha * xv;
    return params.alpha * xv + params.beta * static_cast<double>(neighbour_sum(params.graph, x, v));
  }
  if (x[v] == 0) return kNegInf;
  if (params.variant == RateVariant::Y) {
    return -params.beta * static_cast<double>(neighbour_sum(params.graph, x, v));
  }
  return 0.0;
}

std::vector<Transition> rates(const CtmcParams& params, const Occupancy& x) {
  check_occupancy(params, x);
  std::vector<Transition> out;
  for (std::size_t v = 0; v < x.size(); ++v) {
    for (int delta : {+1, -1}) {
      const double lr = log_rate(params, x, v, delta);
      if (lr == kNegInf) continue;
      Transition t;
      t.vertex = v;
      t.delta = delta;
      t.log_rate = lr;
      t.target = x;
      t.target[v] = delta > 0 ? x[v] + 1 : x[v] - 1;
      out.push_back(std::move(t));
    }
  }
  return out;
}

double potential_Q(const CtmcParams& params, const Occupancy& x) {
  double sq = 0.0;
  for (auto c : x) sq += static_cast<double>(c) * static_cast<double>(c);
  double pair = 0.0;
  for (auto [u, w] : params.graph.edges()) pair += static_cast<double>(x[u]) * static_cast<double>(x[w]);
  return -0.5 * params.alpha * sq - params.beta * pair;
}

double potential_S(const Occupancy& x) {
  double s = 0.0;
  for (auto c : x) s += static_cast<double>(c);
  return s;
}

double potential_W(const CtmcParams& params, const Occupancy& x) {
  return static_cast<double>(potential_W_ld(params, x));
}

double detailed_balance_residual(const CtmcParams& params, const Occupancy& x, std::size_t v,
                                 const LogRateFn& log_rate_fn) {
  check_occupancy(params, x);
  if (v >= x.size()) throw InvalidArgument("vertex out of range");
  if (params.cap && x[v] >= *params.cap) throw InvalidArgument("birth at a full vertex is not admissible");
  Occupancy y = x;
  ++y[v];
  const double forward = log_rate_fn(x, v, +1);
  const double backward = log_rate_fn(y, v, -1);
  if (!std::isfinite(forward) || !std::isfinite(backward)) {
    throw InvalidArgument("transition x -> x + e_v has zero rate in one direction");
  }
  const long double lhs = potential_W_ld(params, x) + static_cast<long double>(forward);
  const long double rhs = potential_W_ld(params, y) + static_cast<long double>(backward);
  return static_cast<double>(std::abs(lhs - rhs));
}

double check_detailed_balance(const CtmcParams& params, const Occupancy& x, std::size_t v) {
  return detailed_balance_residual(params, x, v, [&params](const Occupancy& s, std::size_t w, int d) {
    return log_rate(params, s, w, d);
  });
}

CtmcRun simulate_ctmc(const CtmcParams& params, const Occupancy& x0, double t_max,
                      std::uint64_t event_cap, Rng& rng, const CtmcOptions& options) {
  params.validate();
  check_occupancy(params, x0);
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  const std::size_t n = x0.size();
  const Graph& g = params.graph;
  Occupancy x = x0;
  std::vector<std::uint64_t> around(n);
  for (std::size_t v = 0; v < n; ++v) around[v] = neighbour_sum(g, x, v);
  std::uint64_t total = 0;
  for (auto c : x) total += c;

  CtmcRun run;
  run.max_log_total_rate = kNegInf;
  if (options.thin > 0) run.trajectory.push_back({0.0, x});
  std::vector<double> lr(2 * n);
  double t = 0.0;
  const bool y_rates = params.variant == RateVariant::Y;
  while (true) {
    if (run.events >= event_cap) {
      run.outcome = CtmcOutcome::EventCapHit;
      break;
    }
    double top = kNegInf;
    for (std::size_t v = 0; v < n; ++v) {
      const auto xv = static_cast<double>(x[v]);
      const auto sv = static_cast<double>(around[v]);
      const bool full = params.cap && x[v] >= *params.cap;
      lr[2 * v] = full ? kNegInf : (y_rates ? params.alpha * xv : params.alpha * xv + params.beta * sv);
      lr[2 * v + 1] = x[v] == 0 ? kNegInf : (y_rates ? -params.beta * sv : 0.0);
      top = std::max({top, lr[2 * v], lr[2 * v + 1]});
    }
    double weight_sum = 0.0;
    for (double& l : lr) {
      l = l == kNegInf ? 0.0 : std::exp(l - top);
      weight_sum += l;
    }
    const double log_total = top + std::log(weight_sum);
    run.max_log_total_rate = std::max(run.max_log_total_rate, log_total);
    const double dt = std::exp(std::log(rng.exponential()) - log_total);
    if (t + dt > t_max) {
      t = t_max;
      run.outcome = CtmcOutcome::CompletedHorizon;
      break;
    }
    t += dt;
    const double target = rng.uniform() * weight_sum;
    double acc = 0.0;
    std::size_t channel = lr.size();
    for (std::size_t c = 0; c < lr.size(); ++c) {
      acc += lr[c];
      if (target < acc && lr[c] > 0.0) {
        channel = c;
        break;
      }
    }
    if (channel == lr.size()) {
      // Rounding left target at the very top; take the last live channel.
      for (std::size_t c = lr.size(); c-- > 0;) {
        if (lr[c] > 0.0) {
          channel = c;
          break;
        }
      }
    }
    const std::size_t v = channel / 2;
    const bool birth = channel % 2 == 0;
    if (birth) {
      ++x[v];
      ++total;
      for (std::size_t u : g.neighbours(v)) ++around[u];
    } else {
      --x[v];
      --total;
      for (std::size_t u : g.neighbours(v)) --around[u];
      if (total == 0) ++run.origin_visits;
    }
    ++run.events;
    if (options.thin > 0 && run.events % options.thin == 0) run.trajectory.push_back({t, x});
  }
  run.t_reached = t;
  if (options.thin > 0 && (run.trajectory.empty() || run.trajectory.back().time != t ||
                           run.trajectory.back().state != x)) {
    run.trajectory.push_back({t, x});
  }
  return run;
}

std::vector<double> occupation_frequencies(const CtmcParams& params, const Occupancy& x0,
                                           double t_max, Rng& rng) {
  params.validate();
  check_occupancy(params, x0);
  const std::size_t states = state_count(params, kMaxEnumeratedStates);
  StationaryTable layout;
  layout.num_vertices = x0.size();
  layout.cap = *params.cap;
  std::vector<double> time_in(states, 0.0);
  Occupancy x = x0;
  double t = 0.0;
  while (t < t_max) {
    const auto out = rates(params, x);
    double total = 0.0;
    for (const auto& tr : out) total += tr.rate();
    const double dt = std::min(rng.exponential() / total, t_max - t);
    time_in[layout.index(x)] += dt;
    t += dt;
    if (t >= t_max) break;
    double target = rng.uniform() * total;
    std::size_t pick = out.size() - 1;
    for (std::size_t i = 0; i < out.size(); ++i) {
      target -= out[i].rate();
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
    x = out[pick].target;
  }
  for (double& f : time_in) f /= t_max;
  return time_in;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::PositiveRecurrent: return "PositiveRecurrent";
    case Verdict::NullRecurrent: return "NullRecurrent";
    case Verdict::TransientNonExplosive: return "TransientNonExplosive";
    case Verdict::TransientExplosive: return "TransientExplosive";
    case Verdict::TransientExplosivityUnknown: return "TransientExplosivityUnknown";
  }
  return "unknown";
}

std::string to_string(CtmcOutcome o) {
  return o == CtmcOutcome::CompletedHorizon ? "CompletedHorizon" : "EventCapHit";
}

std::string to_string(RateVariant v) { return v == RateVariant::X ? "X" : "Y"; }

Classification classify(double alpha, double beta, const Graph& g, RateVariant variant,
                        double boundary_tol) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw InvalidArgument("alpha and beta must be finite");
  const std::size_t n = g.num_vertices();
  if (n == 0) throw InvalidArgument("graph has no vertices");
  if (!g.connected()) throw Disconnected("classification needs a connected graph");

  Classification c;
  c.min_degree = g.min_degree();
  if (g.num_edges() > 0) c.lambda1 = g.exact_lambda1() ? *g.exact_lambda1() : lambda1(g);
  if (n <= kDefaultExactCap) c.kappa = independence_number(g);
  if (variant == RateVariant::Y) {
    c.inherited = true;
    c.basis = "theorem (inherited from X-rates)";
  }
  auto set = [&c](Verdict v, std::string label) {
    c.verdict = v;
    c.case_label = std::move(label);
    return c;
  };

  // A single vertex has no interaction; beta plays no role.
  if (beta == 0.0 || g.num_edges() == 0) {
    if (alpha < 0.0) return set(Verdict::PositiveRecurrent, "independent: alpha<0");
    if (alpha == 0.0) {
      return n <= 2 ? set(Verdict::NullRecurrent, "independent: alpha=0, n<=2")
                    : set(Verdict::TransientNonExplosive, "independent: alpha=0, n>=3");
    }
    return set(Verdict::TransientExplosive, "independent: alpha>0");
  }
  if (alpha > 0.0) {
    return beta < 0.0 ? set(Verdict::TransientExplosive, "transient 2(a); explosive (i): alpha>0, beta<0")
                      : set(Verdict::TransientExplosive, "transient 2(a); explosive (ii): alpha+beta*mindeg>0");
  }
  if (alpha == 0.0) {
    if (beta > 0.0) return set(Verdict::TransientExplosive, "transient 2(b); explosive (ii): alpha=0, beta>0");
    if (!c.kappa) throw TooLarge("independence number needed but graph exceeds the exact cap");
    return *c.kappa <= 2
               ? set(Verdict::NullRecurrent, "recurrent 1(b): alpha=0, beta<0, kappa<=2; no stationary law")
               : set(Verdict::TransientNonExplosive, "transient 2(c): alpha=0, beta<0, kappa>=3; rates bounded by 1");
  }
  // alpha < 0.
  const double tol = boundary_tol * std::max(std::abs(alpha), std::abs(beta));
  const double spectral = alpha + beta * c.lambda1;
  if (spectral < -tol) return set(Verdict::PositiveRecurrent, "recurrent 1(a): alpha<0, alpha+beta*lambda1<0");
  if (spectral <= tol) {
    return set(Verdict::TransientNonExplosive, "transient 2(d) critical: beta=-alpha/lambda1, non-explosive");
  }
  const double degree = alpha + beta * static_cast<double>(c.min_degree);
  if (degree > tol) {
    return set(Verdict::TransientExplosive, "transient 2(d); explosive (ii): beta>-alpha/mindeg");
  }
  return set(Verdict::TransientExplosivityUnknown,
             "transient 2(d): -alpha/lambda1<beta<=-alpha/mindeg; conjectured explosive");
}

Occupancy StationaryTable::state(std::size_t index) const {
  Occupancy x(num_vertices);
  for (std::size_t v = 0; v < num_vertices; ++v) {
    x[v] = index % (cap + 1);
    index /= (cap + 1);
  }
  return x;
}

std::size_t StationaryTable::index(const Occupancy& x) const {
  std::size_t idx = 0;
  for (std::size_t v = num_vertices; v-- > 0;) idx = idx * (cap + 1) + x[v];
  return idx;
}

StationaryTable stationary_finite(const CtmcParams& params, std::size_t max_states) {
  params.validate();
  const std::size_t states = state_count(params, max_states);
  StationaryTable table;
  table.num_vertices = params.graph.num_vertices();
  table.cap = *params.cap;
  table.probability.resize(states);
  Occupancy x(table.num_vertices, 0);
  double top = kNegInf;
  for (std::size_t i = 0; i < states; ++i) {
    table.probability[i] = potential_W(params, x);
    top = std::max(top, table.probability[i]);
    for (std::size_t v = 0; v < x.size(); ++v) {
      if (++x[v] <= table.cap) break;
      x[v] = 0;
    }
  }
  double sum = 0.0;
  for (double& p : table.probability) {
    p = std::exp(p - top);
    sum += p;
  }
  for (double& p : table.probability) p /= sum;
  table.log_Z = top + std::log(sum);
  return table;
}

std::vector<double> generator_stationary(const CtmcParams& params, std::size_t max_states) {
  params.validate();
  const std::size_t states = state_count(params, max_states);
  StationaryTable layout;
  layout.num_vertices = params.graph.num_vertices();
  layout.cap = *params.cap;
  // Rows of G^T are the balance equations; the last one is replaced by
  // the normalization sum(pi) = 1.
  const auto last = static_cast<Eigen::Index>(states - 1);
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < states; ++i) {
    const Occupancy x = layout.state(i);
    double out_rate = 0.0;
    for (const auto& tr : rates(params, x)) {
      const double r = tr.rate();
      out_rate += r;
      const auto j = static_cast<Eigen::Index>(layout.index(tr.target));
      if (j != last) triplets.emplace_back(j, static_cast<Eigen::Index>(i), r);
    }
    if (static_cast<Eigen::Index>(i) != last) {
      triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), -out_rate);
    }
    triplets.emplace_back(last, static_cast<Eigen::Index>(i), 1.0);
  }
  const auto n = static_cast<Eigen::Index>(states);
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw Error("NumericalError", "generator factorization failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[last] = 1.0;
  const Eigen::VectorXd pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw Error("NumericalError", "generator solve failed");
  return {pi.data(), pi.data() + pi.size()};
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw InvalidArgument("distributions have different supports");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

std::vector<double> conditional_site_law(const CtmcParams& params, const Occupancy& x, std::size_t v) {
  const std::uint64_t cap = require_cap(params);
  if (x.size() != params.graph.num_vertices()) throw DimensionMismatch("occupancy length differs from graph");
  if (v >= x.size()) throw InvalidArgument("vertex out of range");
  const auto field = params.beta * static_cast<double>(neighbour_sum(params.graph, x, v));
  std::vector<double> p(cap + 1);
  double top = kNegInf;
  for (std::uint64_t k = 0; k <= cap; ++k) {
    const auto kd = static_cast<double>(k);
    p[k] = 0.5 * params.alpha * kd * (kd - 1.0) + kd * field;
    top = std::max(top, p[k]);
  }
  double sum = 0.0;
  for (double& e : p) {
    e = std::exp(e - top);
    sum += e;
  }
  for (double& e : p) e /= sum;
  return p;
}

namespace {

void check_normalized(const std::vector<double>& p, const char* name) {
  double s = 0.0;
  for (double e : p) {
    if (!(e >= 0.0)) throw NotNormalized(std::string(name) + " has a negative or NaN entry");
    s += e;
  }
  if (std::abs(s - 1.0) > 1e-9) throw NotNormalized(std::string(name) + " sums to " + std::to_string(s));
}

}  // namespace

DominanceCheck stochastic_dominance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw InvalidArgument("p and q must have the same support length");
  check_normalized(p, "p");
  check_normalized(q, "q");
  DominanceCheck out{true, true};
  double tail_p = 0.0, tail_q = 0.0;
  for (std::size_t k = p.size(); k-- > 1;) {
    tail_p += p[k];
    tail_q += q[k];
    if (tail_p > tail_q + 1e-12) out.dominated = false;
  }
  for (std::size_t i = 1; i < p.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double a = p[i] * q[j], b = p[j] * q[i];
      if (a > b + 1e-14 * std::max(a, b)) out.premise = false;
    }
  }
  return out;
}

MonotonicityReport check_conditional_monotonicity(const CtmcParams& low, const CtmcParams& high,
                                                  std::size_t max_pairs) {
  low.validate();
  high.validate();
  const std::uint64_t cap = require_cap(low);
  if (require_cap(high) != cap || low.graph.num_vertices() != high.graph.num_vertices()) {
    throw InvalidArgument("both parameter sets need the same graph size and cap");
  }
  const std::size_t n = low.graph.num_vertices();
  double configs = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) configs *= static_cast<double>(cap + 1);
  if (configs * configs * static_cast<double>(n) > static_cast<double>(max_pairs)) {
    throw StateSpaceTooLarge("too many conditioning pairs to enumerate");
  }
  const auto m = static_cast<std::size_t>(configs);
  MonotonicityReport report;
  for (std::size_t v = 0; v < n; ++v) {
    // Configurations off v, embedded as full states with x_v = 0.
    std::vector<Occupancy> off(m, Occupancy(n, 0));
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t rest = i;
      for (std::size_t u = 0; u < n; ++u) {
        if (u == v) continue;
        off[i][u] = rest % (cap + 1);
        rest /= (cap + 1);
      }
    }
    std::vector<std::vector<double>> law_low(m), law_high(m);
    for (std::size_t i = 0; i < m; ++i) {
      law_low[i] = conditional_site_law(low, off[i], v);
      law_high[i] = conditional_site_law(high, off[i], v);
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        bool comparable = true;
        for (std::size_t u = 0; u < n && comparable; ++u) comparable = off[a][u] <= off[b][u];
        if (!comparable) continue;
        ++report.pairs_checked;
        const DominanceCheck d = stochastic_dominance(law_low[a], law_high[b]);
        if (!d.premise) ++report.premise_failures;
        if (!d.dominated) ++report.dominance_failures;
      }
    }
  }
  return report;
}

std::vector<IncreasingStatistic> default_increasing_statistics() {
  return {
      {"sum", [](const Occupancy& x) { return potential_S(x); }},
      {"max", [](const Occupancy& x) {
         std::uint64_t m = 0;
         for (auto c : x) m = std::max(m, c);
         return static_cast<double>(m);
       }},
      {"all_at_least_1", [](const Occupancy& x) {
         for (auto c : x) {
           if (c < 1) return 0.0;
         }
         return 1.0;
       }},
  };
}

double expectation(const StationaryTable& table, const std::function<double(const Occupancy&)>& f) {
  double e = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) e += table.probability[i] * f(table.state(i));
  return e;
}

std::vector<std::vector<double>> occupancy_covariance(const StationaryTable& table) {
  const std::size_t n = table.num_vertices;
  std::vector<double> mean(n, 0.0);
  std::vector<std::vector<double>> second(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const Occupancy x = table.state(i);
    const double p = table.probability[i];
    for (std::size_t a = 0; a < n; ++a) {
      mean[a] += p * static_cast<double>(x[a]);
      for (std::size_t b = 0; b < n; ++b) second[a][b] += p * static_cast<double>(x[a] * x[b]);
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) second[a][b] -= mean[a] * mean[b];
  }
  return second;
}

bool BetaDominanceReport::all_ordered() const {
  return std::all_of(statistics.begin(), statistics.end(), [](const auto& s) { return s.ordered; });
}

BetaDominanceReport verify_beta_dominance(const CtmcParams& low, const CtmcParams& high,
                                          const std::vector<IncreasingStatistic>& statistics,
                                          std::size_t max_states) {
  if (!(low.beta <= high.beta)) throw InvalidArgument("verify_beta_dominance needs beta_1 <= beta_2");
  if (low.alpha != high.alpha) throw InvalidArgument("both parameter sets need the same alpha");
  const StationaryTable t_low = stationary_finite(low, max_states);
  const StationaryTable t_high = stationary_finite(high, max_states);
  BetaDominanceReport report;
  for (const auto& stat : statistics) {
    StatisticComparison c;
    c.name = stat.name;
    c.expectation_low = expectation(t_low, stat.f);
    c.expectation_high = expectation(t_high, stat.f);
    c.ordered = c.expectation_low <= c.expectation_high + 1e-12 * std::max(1.0, std::abs(c.expectation_high));
    report.statistics.push_back(std::move(c));
  }
  report.holley = check_conditional_monotonicity(low, high);
  return report;
}

void write_ctmc_trajectory_csv(std::ostream& out, const CtmcRun& run, std::size_t num_vertices) {
  out << 't';
  for (std::size_t v = 0; v < num_vertices; ++v) out << ",x_" << v;
  out << '\n';
  char buf[32];
  for (const auto& snap : run.trajectory) {
    std::snprintf(buf, sizeof buf, "%.17g", snap.time);
    out << buf;
    for (auto c : snap.state) out << ',' << c;
    out << '\n';
  }
}

}  // namespace csa
