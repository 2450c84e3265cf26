#include "csa/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csa/errors.hpp"

namespace csa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double safe_log(double b) { return b > 0.0 ? std::log(b) : kNegInf; }

}  // namespace

double PpParams::beta(std::size_t m) const {
  return std::visit(Overloaded{
                        [](const ConstantBeta& r) { return r.beta; },
                        [m](const FiniteTable& r) { return m < r.beta.size() ? r.beta[m] : 0.0; },
                        [m](const Strauss& r) { return r.a * std::pow(r.gamma, 0.5 * static_cast<double>(m)); },
                        [m](const CustomRule& r) { return r.beta(m); },
                    },
                    rule);
}

double PpParams::log_beta(std::size_t m) const {
  if (const auto* s = std::get_if<Strauss>(&rule)) {
    return std::log(s->a) + 0.5 * static_cast<double>(m) * std::log(s->gamma);
  }
  return safe_log(beta(m));
}

std::string PpParams::rule_name() const {
  return std::visit(Overloaded{
                        [](const ConstantBeta&) { return std::string("constant"); },
                        [](const FiniteTable&) { return std::string("table"); },
                        [](const Strauss&) { return std::string("strauss"); },
                        [](const CustomRule&) { return std::string("custom"); },
                    },
                    rule);
}

PpParams hard_core(double radius, double beta) { return {radius, FiniteTable{{beta}}}; }

ParamsVerdict validate_params(const PpParams& params) {
  if (!(params.radius > 0.0) || !std::isfinite(params.radius)) return {false, "radius must be positive"};
  return std::visit(
      Overloaded{
          [](const ConstantBeta& r) -> ParamsVerdict {
            if (!(r.beta > 0.0) || !std::isfinite(r.beta)) return {false, "constant beta must be positive"};
            return {true, "constant rate"};
          },
          [](const FiniteTable& r) -> ParamsVerdict {
            if (r.beta.empty() || !(r.beta[0] > 0.0)) return {false, "table needs beta_0 > 0"};
            for (double b : r.beta) {
              if (!(b >= 0.0) || !std::isfinite(b)) return {false, "table entries must be finite and >= 0"};
            }
            return {true, "finite table, bounded"};
          },
          [](const Strauss& r) -> ParamsVerdict {
            if (!(r.a > 0.0) || !std::isfinite(r.a)) return {false, "Strauss a must be positive"};
            if (!(r.gamma > 0.0 && r.gamma < 1.0)) return {false, "Strauss gamma must lie in (0, 1)"};
            return {true, "Strauss, decreasing"};
          },
          [](const CustomRule& r) -> ParamsVerdict {
            if (!r.beta) return {false, "custom rule has no rate function"};
            const double b0 = r.beta(0);
            if (!(b0 >= 0.0) || !std::isfinite(b0)) return {false, "beta_0 must be finite and >= 0"};
            if (!r.certificate) return {false, "custom rule needs a growth certificate beta_m <= C m^alpha, alpha < 1"};
            const auto [C, alpha] = *r.certificate;
            if (!(alpha < 1.0) || !(C > 0.0) || !std::isfinite(C)) {
              return {false, "certificate needs C > 0 and alpha < 1"};
            }
            for (std::size_t m = 1; m <= kCertificateCheckLimit; ++m) {
              const double b = r.beta(m);
              const double bound = C * std::pow(static_cast<double>(m), alpha);
              if (!(b >= 0.0) || b > bound * (1.0 + 1e-12)) {
                return {false, "beta_" + std::to_string(m) + " = " + std::to_string(b) +
                                   " exceeds the certified bound " + std::to_string(bound)};
              }
            }
            return {true, "custom rule within certificate"};
          },
      },
      params.rule);
}

PointConfig::PointConfig(const Domain& domain, const PointSet& points)
    : domain_(domain), points_(domain.dimension()) {
  if (points.dim() != domain.dimension()) throw DimensionMismatch("point dimension differs from domain");
  for (std::size_t i = 0; i < points.size(); ++i) insert(points[i]);
}

bool PointConfig::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (std::equal(x.begin(), x.end(), points_[i].begin())) return true;
  }
  return false;
}

void PointConfig::insert(std::span<const double> x) {
  if (x.size() != domain_.dimension()) throw DimensionMismatch("point dimension differs from domain");
  if (!domain_.contains(x)) throw InvalidArgument("point lies outside the domain");
  if (contains(x)) throw PointAlreadyPresent("point is already in the configuration");
  points_.push_back(x);
}

std::vector<std::size_t> neighbour_counts(const PointSet& points, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("interaction radius must be positive");
  const std::size_t n = points.size();
  std::vector<std::size_t> nu(n, 0);
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (squared_distance(points[i], points[j]) <= r2) {
        ++nu[i];
        ++nu[j];
      }
    }
  }
  return nu;
}

double log_unnormalized_density(const PpParams& params, const PointConfig& config) {
  double total = 0.0;
  for (std::size_t nu : neighbour_counts(config.points(), params.radius)) {
    total += params.log_beta(nu);
    if (total == kNegInf) return kNegInf;
  }
  return total;
}

std::size_t pair_count(const PointConfig& config, double radius) {
  const auto nu = neighbour_counts(config.points(), radius);
  return std::accumulate(nu.begin(), nu.end(), std::size_t{0}) / 2;
}

namespace {

// log f(x + u) - log f(x) given the neighbour counts of x. Assumes f(x) > 0.
double log_birth_ratio(const PpParams& params, const PointSet& points, const std::vector<std::size_t>& nu,
                       std::span<const double> u) {
  const double r2 = params.radius * params.radius;
  std::size_t around = 0;
  double lr = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (squared_distance(u, points[k]) <= r2) {
      ++around;
      lr += params.log_beta(nu[k] + 1) - params.log_beta(nu[k]);
    }
  }
  return lr + params.log_beta(around);
}

}  // namespace

double papangelou_ratio(const PpParams& params, const PointConfig& config, std::span<const double> u) {
  if (u.size() != config.domain().dimension()) throw DimensionMismatch("point dimension differs from domain");
  if (config.contains(u)) throw PointAlreadyPresent("u is already in the configuration");
  const auto nu = neighbour_counts(config.points(), params.radius);
  for (std::size_t k : nu) {
    // A forbidden x gives 0/0; report the insertion as forbidden too.
    if (params.log_beta(k) == kNegInf) return 0.0;
  }
  const double lr = log_birth_ratio(params, config.points(), nu, u);
  return lr == kNegInf ? 0.0 : std::exp(lr);
}

double PpDiagnostics::birth_acceptance() const {
  return births_proposed == 0 ? 0.0 : static_cast<double>(births_accepted) / static_cast<double>(births_proposed);
}

double PpDiagnostics::death_acceptance() const {
  return deaths_proposed == 0 ? 0.0 : static_cast<double>(deaths_accepted) / static_cast<double>(deaths_proposed);
}

double birth_transition_probability(const PpParams& params, const PointConfig& config,
                                    std::span<const double> u) {
  const double vol = config.domain().volume();
  const double ratio = papangelou_ratio(params, config, u);
  const double n1 = static_cast<double>(config.size() + 1);
  return 0.5 / vol * std::min(1.0, vol * ratio / n1);
}

double death_transition_probability(const PpParams& params, const PointConfig& config, std::size_t i) {
  const std::size_t n = config.size();
  if (i >= n) throw InvalidArgument("point index out of range");
  PointConfig rest = config;
  rest.swap_remove(i);
  const double vol = config.domain().volume();
  const double ratio = papangelou_ratio(params, rest, config[i]);
  // ratio 0 here means x without x_i is forbidden, so f(x) / f(x - x_i) is infinite.
  const double accept = ratio == 0.0 ? 0.0 : std::min(1.0, static_cast<double>(n) / (vol * ratio));
  return 0.5 / static_cast<double>(n) * accept;
}

double geweke_z(const std::vector<std::size_t>& trace) {
  const std::size_t n = trace.size();
  if (n < 100) return 0.0;
  auto stats = [&trace](std::size_t lo, std::size_t hi) {
    // Batch means with 10 batches.
    const std::size_t len = hi - lo, batches = 10, size = len / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t i = lo + b * size; i < lo + (b + 1) * size; ++i) means[b] += static_cast<double>(trace[i]);
      means[b] /= static_cast<double>(size);
    }
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(batches - 1) * static_cast<double>(batches);
    return std::pair{mean, var};
  };
  const auto [ma, va] = stats(0, n / 10);
  const auto [mb, vb] = stats(n / 2, n);
  const double se = std::sqrt(va + vb);
  if (se == 0.0) return ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
  return (ma - mb) / se;
}

PpSample sample_bd_mcmc(const PpParams& params, const Domain& domain, std::uint64_t n_moves, Rng& rng,
                        const PpOptions& options) {
  const ParamsVerdict verdict = validate_params(params);
  if (!verdict.ok) throw InvalidArgument("point process parameters rejected: " + verdict.reason);
  if (n_moves < 1) throw InvalidArgument("n_moves must be at least 1");
  PointSet points(domain.dimension());
  if (options.initial) {
    if (options.initial->domain().dimension() != domain.dimension()) {
      throw DimensionMismatch("initial configuration dimension differs from domain");
    }
    points = options.initial->points();
  }
  std::vector<std::size_t> nu = neighbour_counts(points, params.radius);
  for (std::size_t k : nu) {
    if (params.log_beta(k) == kNegInf) throw InvalidArgument("initial configuration has zero density");
  }
  NeighbourGrid grid(domain, params.radius);
  for (std::size_t i = 0; i < points.size(); ++i) grid.insert(i, points[i]);

  const double log_vol = std::log(domain.volume());
  const std::uint64_t thin = std::max<std::uint64_t>(1, options.trace_thin);
  PpDiagnostics diag;
  diag.size_trace.reserve(static_cast<std::size_t>(n_moves / thin) + 1);
  std::vector<double> u(domain.dimension());
  std::vector<std::size_t> around;

  for (std::uint64_t move = 1; move <= n_moves; ++move) {
    const std::size_t n = points.size();
    if (rng.uniform() < 0.5) {
      ++diag.births_proposed;
      domain.sample_uniform(rng, u);
      around.clear();
      grid.for_each_neighbour(u, points, [&around](std::size_t j) { around.push_back(j); });
      double lr = params.log_beta(around.size());
      for (std::size_t k : around) lr += params.log_beta(nu[k] + 1) - params.log_beta(nu[k]);
      const double log_accept = log_vol + lr - std::log(static_cast<double>(n + 1));
      if (std::log(rng.uniform_pos()) <= log_accept) {
        ++diag.births_accepted;
        for (std::size_t k : around) ++nu[k];
        nu.push_back(around.size());
        points.push_back(u);
        grid.insert(n, u);
      }
    } else {
      ++diag.deaths_proposed;
      if (n > 0) {
        const std::size_t i = rng.uniform_int(n);
        around.clear();
        grid.for_each_neighbour(points[i], points, [&around, i](std::size_t j) {
          if (j != i) around.push_back(j);
        });
        // log f(x) - log f(x - x_i); +infinity when x - x_i is forbidden.
        double lr = params.log_beta(around.size());
        for (std::size_t k : around) lr += params.log_beta(nu[k]) - params.log_beta(nu[k] - 1);
        const double log_accept = std::log(static_cast<double>(n)) - log_vol - lr;
        if (std::log(rng.uniform_pos()) <= log_accept) {
          ++diag.deaths_accepted;
          for (std::size_t k : around) --nu[k];
          grid.erase(i, points[i]);
          const std::size_t last = n - 1;
          if (i != last) {
            grid.relabel(last, i, points[last]);
            nu[i] = nu[last];
          }
          nu.pop_back();
          points.swap_remove(i);
        }
      }
    }
    if (move % thin == 0) diag.size_trace.push_back(points.size());
  }
  diag.geweke_z = geweke_z(diag.size_trace);
  return {PointConfig(domain, points), std::move(diag)};
}

LogZEstimate estimate_log_Z(const PpParams& params, const Domain& domain, std::size_t n_samples, Rng& rng) {
  if (n_samples < 100) throw InvalidArgument("estimate_log_Z needs at least 100 samples");
  const ParamsVerdict verdict = validate_params(params);
  if (!verdict.ok) throw InvalidArgument("point process parameters rejected: " + verdict.reason);
  const double vol = domain.volume();
  std::vector<double> log_w(n_samples);
  std::vector<double> x(domain.dimension());
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::uint64_t count = rng.poisson(vol);
    PointSet pts(domain.dimension());
    pts.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
      domain.sample_uniform(rng, x);
      pts.push_back(x);
    }
    double lw = 0.0;
    for (std::size_t nu : neighbour_counts(pts, params.radius)) lw += params.log_beta(nu);
    log_w[s] = lw;
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  LogZEstimate out;
  out.samples = n_samples;
  if (top == kNegInf) {
    out.log_Z = kNegInf;
    out.standard_error = std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<double> w(n_samples);
  double sum = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    w[s] = std::exp(log_w[s] - top);
    sum += w[s];
  }
  const double nd = static_cast<double>(n_samples);
  out.log_Z = top + std::log(sum / nd);
  std::vector<double> loo(n_samples);
  double loo_mean = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double rest = std::max(sum - w[s], 0.0);
    loo[s] = top + std::log(rest / (nd - 1.0));
    loo_mean += loo[s];
  }
  loo_mean /= nd;
  if (!std::isfinite(loo_mean)) {
    out.standard_error = std::numeric_limits<double>::infinity();
    return out;
  }
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  out.standard_error = std::sqrt((nd - 1.0) / nd * ss);
  return out;
}

}  // namespace csa
