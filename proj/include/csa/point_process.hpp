#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "csa/rng.hpp"
#include "csa/spatial.hpp"

namespace csa {

// beta_m = beta for every m (Poisson process of intensity beta).
struct ConstantBeta {
  double beta = 1.0;
};

// beta_0..beta_N, zero beyond N. (beta, 0, 0, ...) is the hard-core process.
struct FiniteTable {
  std::vector<double> beta;
};

// beta_i = a * gamma^{i/2}.
struct Strauss {
  double a = 1.0;
  double gamma = 0.5;
};

// beta_m <= C m^alpha for all m >= 1.
struct GrowthCertificate {
  double C = 1.0;
  double alpha = 0.0;
};

struct CustomRule {
  std::function<double(std::size_t)> beta;
  std::optional<GrowthCertificate> certificate;
};

using RateRule = std::variant<ConstantBeta, FiniteTable, Strauss, CustomRule>;

struct PpParams {
  double radius = 0.0;
  RateRule rule;

  double beta(std::size_t m) const;
  // log beta_m, -infinity when beta_m = 0.
  double log_beta(std::size_t m) const;
  std::string rule_name() const;
};

PpParams hard_core(double radius, double beta);

struct ParamsVerdict {
  bool ok = false;
  std::string reason;
};

// Checks positivity and the sublinear growth bound beta_m <= C m^alpha,
// alpha < 1. Custom rules pass only with a certificate that holds for
// m = 1..kCertificateCheckLimit.
ParamsVerdict validate_params(const PpParams& params);
inline constexpr std::size_t kCertificateCheckLimit = 10'000;

// Unordered set of distinct points inside a domain. Insertion order is kept
// for reproducibility but carries no meaning.
class PointConfig {
 public:
  explicit PointConfig(const Domain& domain) : domain_(domain), points_(domain.dimension()) {}
  PointConfig(const Domain& domain, const PointSet& points);

  const Domain& domain() const { return domain_; }
  const PointSet& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  std::span<const double> operator[](std::size_t i) const { return points_[i]; }
  bool contains(std::span<const double> x) const;

  // Throws PointAlreadyPresent or InvalidArgument (outside the domain).
  void insert(std::span<const double> x);
  void swap_remove(std::size_t i) { points_.swap_remove(i); }

 private:
  Domain domain_;
  PointSet points_;
};

// nu(x_k, x) for every point: neighbours within radius, excluding itself.
std::vector<std::size_t> neighbour_counts(const PointSet& points, double radius);

// sum_k log beta_{nu(x_k, x)}; -infinity for a forbidden configuration.
double log_unnormalized_density(const PpParams& params, const PointConfig& config);

// s(x): number of unordered pairs at distance <= radius.
std::size_t pair_count(const PointConfig& config, double radius);

// f(x + u) / f(x). Throws PointAlreadyPresent if u is in the configuration.
double papangelou_ratio(const PpParams& params, const PointConfig& config, std::span<const double> u);

struct PpOptions {
  // Record |x| every `trace_thin` moves.
  std::uint64_t trace_thin = 1;
  std::optional<PointConfig> initial;
};

struct PpDiagnostics {
  std::uint64_t births_proposed = 0;
  std::uint64_t births_accepted = 0;
  std::uint64_t deaths_proposed = 0;
  std::uint64_t deaths_accepted = 0;
  std::vector<std::size_t> size_trace;
  // Mean of the first 10% of the trace against the last 50%, in batch-means
  // standard errors. |z| > 2 suggests the chain has not settled.
  double geweke_z = 0.0;

  double birth_acceptance() const;
  double death_acceptance() const;
};

struct PpSample {
  PointConfig config;
  PpDiagnostics diagnostics;
};

// Birth-death Metropolis-Hastings. Each move is a birth proposal (uniform u,
// accepted with min(1, |D| r(u) / (n+1))) or, with probability 1/2, a death
// proposal (uniform x_i, accepted with min(1, n / (|D| r'))), r' the ratio of
// adding x_i back to x without x_i.
PpSample sample_bd_mcmc(const PpParams& params, const Domain& domain, std::uint64_t n_moves, Rng& rng,
                        const PpOptions& options = {});

// Move probabilities of the kernel above, for checking detailed balance.
double birth_transition_probability(const PpParams& params, const PointConfig& config,
                                    std::span<const double> u);
double death_transition_probability(const PpParams& params, const PointConfig& config, std::size_t i);

double geweke_z(const std::vector<std::size_t>& trace);

struct LogZEstimate {
  double log_Z = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

// Z = E[prod_k beta_{nu(x_k, x)}] with x a unit-rate Poisson process on D
// (the e^{-|D|} factor included). Sample mean in log space, jackknife error.
LogZEstimate estimate_log_Z(const PpParams& params, const Domain& domain, std::size_t n_samples, Rng& rng);

}  // namespace csa
