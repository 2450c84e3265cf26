#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "csa/rng.hpp"
#include "csa/spatial.hpp"

namespace csa {

// Growth-rate table of the sequential model: beta_0 = 1 (not stored),
// beta_1..beta_N > 0, beta_k = 0 for k > N.
class CsaParams {
 public:
  CsaParams(double radius, std::vector<double> beta);

  // Accepts a full table (beta_0, beta_1, ...) with beta_0 > 0; rescales so
  // that beta_0 = 1 and drops trailing zeros. Interior zeros are rejected.
  static CsaParams from_table(double radius, const std::vector<double>& table);

  double radius() const { return radius_; }
  std::size_t max_neighbours() const { return beta_.size(); }  // N
  const std::vector<double>& beta() const { return beta_; }
  double rate(std::size_t k) const {
    if (k == 0) return 1.0;
    return k <= beta_.size() ? beta_[k - 1] : 0.0;
  }
  double max_rate() const;

 private:
  double radius_;
  std::vector<double> beta_;
};

struct SamplerOptions {
  // Consecutive rejections after which the domain is treated as jammed.
  std::size_t max_rejection_streak = 10'000'000;
};

// Exact acceptance-rejection sampler with envelope C = max_k beta_k.
// Throws JammedBeforeTarget if the rejection streak limit is reached.
PointSeq sample_csa(const CsaParams& params, const Domain& domain, std::size_t target_len,
                    Rng& rng, const SamplerOptions& options = {});

struct TStatistics {
  std::vector<std::size_t> t;  // t_0..t_N
  std::size_t overflow = 0;    // points that arrived with more than N prior neighbours
};

TStatistics t_statistics(const PointSeq& seq, double radius, std::size_t max_neighbours);

// Per-point prior-neighbour counts nu(x_i, x(i-1)), i = 1..l.
std::vector<std::size_t> arrival_neighbour_counts(const PointSeq& seq, double radius);

struct CsaStatistics {
  std::vector<std::size_t> t;
  std::size_t overflow = 0;
  // gamma[j][k]: volume of {u in D : nu(u, x(k)) = j}, j = 0..N, k = 0..l-1.
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<double>> gamma_se;
  // Column k = l (after the last point), used by the limit profiles.
  std::vector<double> gamma_terminal;
  std::size_t mc_samples = 0;
  double domain_volume = 0.0;

  std::size_t max_neighbours() const { return gamma.empty() ? 0 : gamma.size() - 1; }
  std::size_t length() const { return gamma.empty() ? 0 : gamma.front().size(); }
};

// Monte-Carlo Gamma estimates. One set of mc_n uniform points is shared by all
// prefixes k; their neighbour counts are updated as points are added. The t
// part of the result is left empty.
CsaStatistics gamma_statistics(const PointSeq& seq, const Domain& domain, double radius,
                               std::size_t max_neighbours, std::size_t mc_n, Rng& rng);

// t and Gamma together.
CsaStatistics csa_statistics(const PointSeq& seq, const Domain& domain, double radius,
                             std::size_t max_neighbours, std::size_t mc_n, Rng& rng);

// Exact Gamma for d = 1 by sweeping the breakpoints x_i +- R. Columns
// k = 0..l (the last one is the terminal column).
std::vector<std::vector<double>> gamma_exact_1d(const PointSeq& seq, const Domain& domain,
                                                double radius, std::size_t max_neighbours);

// max_i nu(x_i, x(i-1)).
std::size_t estimate_N(const PointSeq& seq, double radius);

// Minimum distance between a point and any earlier point: the RSA radius
// heuristic. Infinite for sequences shorter than two.
double rsa_radius_estimate(const PointSeq& seq);

// log p(x(l); beta). `beta` holds beta_1..beta_N. Returns -inf when the data
// contain overflow points (impossible under this N).
double log_likelihood(const CsaStatistics& stats, const std::vector<double>& beta);

// Score equations t_j - sum_{k=2}^{l} beta_j G_{j,k-1} / (G_{0,k-1} + sum_i beta_i G_{i,k-1}).
std::vector<double> mle_residuals(const CsaStatistics& stats, const std::vector<double>& beta);

struct FitResult {
  std::size_t n_hat = 0;
  std::vector<double> beta_hat;
  std::vector<double> residuals;
  CsaStatistics stats;
  std::size_t iterations = 0;
  std::string method;
};

FitResult fit_mle(const PointSeq& seq, const Domain& domain, double radius, std::size_t mc_n,
                  Rng& rng, double tol);

// Fit from precomputed statistics (N taken from the statistics).
FitResult fit_mle_from_statistics(CsaStatistics stats, double tol);

// Accepted points per unit volume once `streak` consecutive proposals fail.
double estimate_jamming(const CsaParams& params, const Domain& domain, Rng& rng,
                        std::size_t streak = 10'000);

struct ProfileOptions {
  double mc_per_volume = 20'000.0;
  // Trapezoid nodes over (0, mu); 0 means one node per observed point.
  std::size_t quadrature_nodes = 0;
  SamplerOptions sampler{};
};

struct ProfileRow {
  double scale = 0.0;
  std::size_t length = 0;
  std::vector<double> t_over_m;      // j = 0..N
  std::vector<double> gamma_over_m;  // j = 0..N at k = l_m
  std::vector<double> residuals;     // j = 1..N, limit MLE system at the true beta
};

// Simulates l_m = floor(mu * m) points in base.rescaled(m) for each scale and
// reports normalized statistics plus the infinite-volume MLE residuals.
std::vector<ProfileRow> empirical_limit_profile(const CsaParams& params, const Domain& base,
                                                const std::vector<double>& scales, double mu,
                                                Rng& rng, const ProfileOptions& options = {});

}  // namespace csa
