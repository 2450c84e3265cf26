#include "csa/csa_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "csa/errors.hpp"

namespace csa {

CsaParams::CsaParams(double radius, std::vector<double> beta)
    : radius_(radius), beta_(std::move(beta)) {
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw InvalidArgument("interaction radius must be positive and finite");
  }
  for (std::size_t k = 0; k < beta_.size(); ++k) {
    if (!(beta_[k] > 0.0) || !std::isfinite(beta_[k])) {
      throw InvalidArgument("beta_" + std::to_string(k + 1) + " must be positive and finite");
    }
  }
}

CsaParams CsaParams::from_table(double radius, const std::vector<double>& table) {
  if (table.empty() || !(table[0] > 0.0)) throw InvalidArgument("beta_0 must be positive");
  std::size_t last = table.size();
  while (last > 1 && table[last - 1] == 0.0) --last;
  std::vector<double> beta;
  for (std::size_t k = 1; k < last; ++k) {
    if (!(table[k] > 0.0)) {
      throw InvalidArgument("beta table has a zero or negative entry before its last positive one");
    }
    beta.push_back(table[k] / table[0]);
  }
  return CsaParams(radius, std::move(beta));
}

double CsaParams::max_rate() const {
  double c = 1.0;
  for (double b : beta_) c = std::max(c, b);
  return c;
}

PointSeq sample_csa(const CsaParams& params, const Domain& domain, std::size_t target_len,
                    Rng& rng, const SamplerOptions& options) {
  const std::size_t dim = domain.dimension();
  PointSeq seq(dim);
  seq.reserve(target_len);
  NeighbourGrid grid(domain, params.radius());
  const double envelope = params.max_rate();
  std::vector<double> y(dim);
  std::size_t streak = 0;
  while (seq.size() < target_len) {
    domain.sample_uniform(rng, y);
    const std::size_t nu = grid.count(y, seq);
    const double rate = params.rate(nu);
    // Draw the acceptance uniform even when rate is 0 or C so the stream
    // consumption is independent of the outcome.
    const double u = rng.uniform();
    if (u * envelope < rate) {
      grid.insert(seq.size(), y);
      seq.push_back(y);
      streak = 0;
    } else if (++streak >= options.max_rejection_streak) {
      throw JammedBeforeTarget("no acceptance in " + std::to_string(streak) +
                               " consecutive proposals after " + std::to_string(seq.size()) +
                               " of " + std::to_string(target_len) + " points");
    }
  }
  return seq;
}

std::vector<std::size_t> arrival_neighbour_counts(const PointSeq& seq, double radius) {
  std::vector<std::size_t> counts(seq.size());
  if (seq.empty()) return counts;
  // Bounding box of the data; degenerate sides are padded.
  std::vector<double> lo(seq.dim(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(seq.dim(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t d = 0; d < seq.dim(); ++d) {
      lo[d] = std::min(lo[d], seq[i][d]);
      hi[d] = std::max(hi[d], seq[i][d]);
    }
  }
  for (std::size_t d = 0; d < seq.dim(); ++d) {
    lo[d] -= radius;
    hi[d] += radius;
  }
  NeighbourGrid grid(Domain(lo, hi), radius);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    counts[i] = grid.count(seq[i], seq);
    grid.insert(i, seq[i]);
  }
  return counts;
}

TStatistics t_statistics(const PointSeq& seq, double radius, std::size_t max_neighbours) {
  TStatistics out;
  out.t.assign(max_neighbours + 1, 0);
  for (std::size_t nu : arrival_neighbour_counts(seq, radius)) {
    if (nu <= max_neighbours) {
      ++out.t[nu];
    } else {
      ++out.overflow;
    }
  }
  return out;
}

std::size_t estimate_N(const PointSeq& seq, double radius) {
  std::size_t n = 0;
  for (std::size_t nu : arrival_neighbour_counts(seq, radius)) n = std::max(n, nu);
  return n;
}

double rsa_radius_estimate(const PointSeq& seq) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < seq.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) best = std::min(best, squared_distance(seq[i], seq[j]));
  }
  return std::sqrt(best);
}

CsaStatistics gamma_statistics(const PointSeq& seq, const Domain& domain, double radius,
                               std::size_t max_neighbours, std::size_t mc_n, Rng& rng) {
  if (mc_n == 0) throw InvalidArgument("mc_n must be at least 1");
  if (seq.dim() != domain.dimension()) throw DimensionMismatch("sequence and domain dimensions differ");
  const std::size_t ell = seq.size();
  const std::size_t rows = max_neighbours + 1;
  const double vol = domain.volume();

  CsaStatistics stats;
  stats.mc_samples = mc_n;
  stats.domain_volume = vol;
  stats.gamma.assign(rows, std::vector<double>(ell, 0.0));
  stats.gamma_se.assign(rows, std::vector<double>(ell, 0.0));
  stats.gamma_terminal.assign(rows, 0.0);

  PointSet probes(domain.dimension());
  probes.reserve(mc_n);
  std::vector<double> u(domain.dimension());
  for (std::size_t i = 0; i < mc_n; ++i) {
    domain.sample_uniform(rng, u);
    probes.push_back(u);
  }
  NeighbourGrid probe_grid(domain, radius);
  for (std::size_t i = 0; i < mc_n; ++i) probe_grid.insert(i, probes[i]);

  // hist[j] = number of probes with exactly j neighbours in x(k), j <= N.
  std::vector<std::size_t> probe_count(mc_n, 0);
  std::vector<std::size_t> hist(rows, 0);
  hist[0] = mc_n;
  const double m = static_cast<double>(mc_n);
  auto record = [&](std::size_t k) {
    for (std::size_t j = 0; j < rows; ++j) {
      const double p = static_cast<double>(hist[j]) / m;
      if (k < ell) {
        stats.gamma[j][k] = vol * p;
        stats.gamma_se[j][k] = vol * std::sqrt(p * (1.0 - p) / m);
      } else {
        stats.gamma_terminal[j] = vol * p;
      }
    }
  };
  for (std::size_t k = 0; k <= ell; ++k) {
    if (k > 0) {
      probe_grid.for_each_neighbour(seq[k - 1], probes, [&](std::size_t i) {
        std::size_t& c = probe_count[i];
        if (c < rows) --hist[c];
        ++c;
        if (c < rows) ++hist[c];
      });
    }
    record(k);
  }
  if (ell > 0) {
    // Gamma_{0,0} = |D| holds for the estimator as well; pin it exactly.
    stats.gamma[0][0] = vol;
    stats.gamma_se[0][0] = 0.0;
  }
  return stats;
}

CsaStatistics csa_statistics(const PointSeq& seq, const Domain& domain, double radius,
                             std::size_t max_neighbours, std::size_t mc_n, Rng& rng) {
  CsaStatistics stats = gamma_statistics(seq, domain, radius, max_neighbours, mc_n, rng);
  TStatistics ts = t_statistics(seq, radius, max_neighbours);
  stats.t = std::move(ts.t);
  stats.overflow = ts.overflow;
  return stats;
}

std::vector<std::vector<double>> gamma_exact_1d(const PointSeq& seq, const Domain& domain,
                                                double radius, std::size_t max_neighbours) {
  if (domain.dimension() != 1 || seq.dim() != 1) throw DimensionMismatch("gamma_exact_1d needs d = 1");
  const double a = domain.lower()[0];
  const double b = domain.upper()[0];
  const std::size_t ell = seq.size();
  std::vector<std::vector<double>> gamma(max_neighbours + 1, std::vector<double>(ell + 1, 0.0));
  std::vector<std::pair<double, int>> events;
  for (std::size_t k = 0; k <= ell; ++k) {
    events.clear();
    for (std::size_t i = 0; i < k; ++i) {
      const double x = seq[i][0];
      events.emplace_back(std::clamp(x - radius, a, b), +1);
      events.emplace_back(std::clamp(x + radius, a, b), -1);
    }
    std::sort(events.begin(), events.end());
    double pos = a;
    int depth = 0;
    for (const auto& [where, delta] : events) {
      if (depth >= 0 && static_cast<std::size_t>(depth) <= max_neighbours) {
        gamma[static_cast<std::size_t>(depth)][k] += where - pos;
      }
      pos = where;
      depth += delta;
    }
    if (static_cast<std::size_t>(depth) <= max_neighbours) {
      gamma[static_cast<std::size_t>(depth)][k] += b - pos;
    }
  }
  return gamma;
}

namespace {

void check_beta(const CsaStatistics& stats, const std::vector<double>& beta) {
  if (beta.size() != stats.max_neighbours()) {
    throw InvalidArgument("beta has " + std::to_string(beta.size()) + " entries, statistics have N = " +
                          std::to_string(stats.max_neighbours()));
  }
  for (double b : beta) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("beta entries must be positive and finite");
  }
}

double denominator(const CsaStatistics& stats, const std::vector<double>& beta, std::size_t k) {
  double d = stats.gamma[0][k];
  for (std::size_t j = 1; j < stats.gamma.size(); ++j) d += beta[j - 1] * stats.gamma[j][k];
  return d;
}

}  // namespace

double log_likelihood(const CsaStatistics& stats, const std::vector<double>& beta) {
  check_beta(stats, beta);
  if (stats.overflow > 0) return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (std::size_t j = 1; j < stats.t.size(); ++j) {
    value += static_cast<double>(stats.t[j]) * std::log(beta[j - 1]);
  }
  for (std::size_t k = 0; k < stats.length(); ++k) {
    const double d = denominator(stats, beta, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw NonFiniteLikelihood("normalizing integral for prefix k = " + std::to_string(k) +
                                " is not positive");
    }
    value -= std::log(d);
  }
  return value;
}

std::vector<double> mle_residuals(const CsaStatistics& stats, const std::vector<double>& beta) {
  check_beta(stats, beta);
  const std::size_t n = stats.max_neighbours();
  std::vector<double> r(n, 0.0);
  for (std::size_t j = 1; j <= n; ++j) r[j - 1] = static_cast<double>(stats.t[j]);
  // k = 1 contributes nothing because Gamma_{j,0} = 0 for j >= 1.
  for (std::size_t k = 1; k < stats.length(); ++k) {
    const double d = denominator(stats, beta, k);
    if (!(d > 0.0)) throw NonFiniteLikelihood("non-positive normalizing integral");
    for (std::size_t j = 1; j <= n; ++j) r[j - 1] -= beta[j - 1] * stats.gamma[j][k] / d;
  }
  return r;
}

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Single-parameter case: the residual is strictly decreasing in beta, so
// bracket it in log(beta) and bisect.
void fit_one_parameter(FitResult& fit, double tol) {
  const CsaStatistics& stats = fit.stats;
  auto residual = [&](double log_beta) { return mle_residuals(stats, {std::exp(log_beta)})[0]; };
  double lo = 0.0, hi = 0.0;
  double r_lo = residual(lo), r_hi = r_lo;
  while (r_lo < 0.0) {
    lo -= 2.0;
    r_lo = residual(lo);
    if (lo < -700.0) throw DivergentEstimate("score stays negative as beta -> 0");
  }
  while (r_hi > 0.0) {
    hi += 2.0;
    r_hi = residual(hi);
    if (hi > 700.0) throw DivergentEstimate("score stays positive as beta -> infinity");
  }
  fit.method = "bisection";
  std::size_t it = 0;
  double mid = 0.5 * (lo + hi);
  double r_mid = residual(mid);
  while (std::abs(r_mid) > tol && it < 400) {
    if (r_mid > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (next == mid) break;
    mid = next;
    r_mid = residual(mid);
    ++it;
  }
  fit.iterations = it;
  fit.beta_hat = {std::exp(mid)};
  fit.residuals = {r_mid};
}

// Damped Newton ascent of the concave log-likelihood in theta = log(beta).
// The gradient in theta is exactly the score residual vector.
void fit_newton(FitResult& fit, double tol) {
  const CsaStatistics& stats = fit.stats;
  const std::size_t n = stats.max_neighbours();
  std::vector<double> theta(n, 0.0);
  auto beta_of = [](const std::vector<double>& th) {
    std::vector<double> b(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) b[i] = std::exp(th[i]);
    return b;
  };
  fit.method = "newton-log";
  std::vector<double> beta = beta_of(theta);
  double value = log_likelihood(stats, beta);
  std::vector<double> grad = mle_residuals(stats, beta);
  std::size_t it = 0;
  for (; it < 500 && max_abs(grad) > tol; ++it) {
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k < stats.length(); ++k) {
      const double d = denominator(stats, beta, k);
      Eigen::VectorXd w(static_cast<Eigen::Index>(n));
      for (std::size_t j = 1; j <= n; ++j) w[static_cast<Eigen::Index>(j - 1)] = beta[j - 1] * stats.gamma[j][k] / d;
      info -= w * w.transpose();
      info.diagonal() += w;
    }
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) g[static_cast<Eigen::Index>(j)] = grad[j];
    Eigen::VectorXd step;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 1e-12).all()) {
      step = ldlt.solve(g);
    } else {
      step = g / std::max(1.0, g.norm());
    }
    // Cap the step so a nearly flat direction cannot jump out of range.
    const double longest = step.cwiseAbs().maxCoeff();
    if (longest > 5.0) step *= 5.0 / longest;
    double scale = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, scale *= 0.5) {
      std::vector<double> trial(theta);
      for (std::size_t j = 0; j < n; ++j) trial[j] += scale * step[static_cast<Eigen::Index>(j)];
      const std::vector<double> trial_beta = beta_of(trial);
      const double trial_value = log_likelihood(stats, trial_beta);
      // Near the maximum the likelihood change drops below its rounding
      // error; a smaller score is then the acceptance test.
      std::vector<double> trial_grad;
      bool accept = trial_value > value;
      if (!accept) {
        trial_grad = mle_residuals(stats, trial_beta);
        accept = max_abs(trial_grad) < max_abs(grad);
      }
      if (accept) {
        theta = trial;
        beta = trial_beta;
        value = trial_value;
        grad = trial_grad.empty() ? mle_residuals(stats, beta) : trial_grad;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    if (max_abs(theta) > 700.0) throw DivergentEstimate("log-beta estimate diverges; no finite maximizer");
  }
  fit.iterations = it;
  fit.beta_hat = beta;
  fit.residuals = grad;
}

}  // namespace

FitResult fit_mle_from_statistics(CsaStatistics stats, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  const std::size_t ell = stats.length();
  if (ell < 2) throw InvalidArgument("fitting needs at least two points");
  if (stats.overflow > 0) throw InvalidArgument("statistics contain points above N");
  FitResult fit;
  fit.n_hat = stats.max_neighbours();
  fit.stats = std::move(stats);
  if (fit.n_hat == 0) {
    fit.method = "none";
    return fit;
  }
  for (std::size_t j = 1; j <= fit.n_hat; ++j) {
    if (fit.stats.t[j] == 0) throw NonIdentifiable(static_cast<int>(j));
  }
  if (fit.n_hat == 1) {
    if (fit.stats.t[1] == ell - 1) {
      throw DivergentEstimate("t_1 = l - 1: every point after the first had a neighbour, beta_hat = infinity");
    }
    fit_one_parameter(fit, tol);
  } else {
    fit_newton(fit, tol);
  }
  if (!(max_abs(fit.residuals) <= tol)) {
    throw DivergentEstimate("score residual " + std::to_string(max_abs(fit.residuals)) +
                            " did not reach tolerance");
  }
  return fit;
}

FitResult fit_mle(const PointSeq& seq, const Domain& domain, double radius, std::size_t mc_n,
                  Rng& rng, double tol) {
  if (seq.size() < 2) throw InvalidArgument("fitting needs at least two points");
  const std::size_t n_hat = estimate_N(seq, radius);
  return fit_mle_from_statistics(csa_statistics(seq, domain, radius, n_hat, mc_n, rng), tol);
}

double estimate_jamming(const CsaParams& params, const Domain& domain, Rng& rng, std::size_t streak) {
  if (streak == 0) throw InvalidArgument("streak must be positive");
  const std::size_t dim = domain.dimension();
  PointSeq seq(dim);
  NeighbourGrid grid(domain, params.radius());
  const double envelope = params.max_rate();
  std::vector<double> y(dim);
  std::size_t run = 0;
  while (run < streak) {
    domain.sample_uniform(rng, y);
    const double rate = params.rate(grid.count(y, seq));
    if (rng.uniform() * envelope < rate) {
      grid.insert(seq.size(), y);
      seq.push_back(y);
      run = 0;
    } else {
      ++run;
    }
  }
  return static_cast<double>(seq.size()) / domain.volume();
}

std::vector<ProfileRow> empirical_limit_profile(const CsaParams& params, const Domain& base,
                                                const std::vector<double>& scales, double mu,
                                                Rng& rng, const ProfileOptions& options) {
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (!(scales[i] > scales[i - 1])) throw InvalidArgument("scales must be increasing");
  }
  const std::size_t n = params.max_neighbours();
  std::vector<ProfileRow> rows;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const double m = scales[s];
    const Domain domain = base.rescaled(m);
    const auto ell = static_cast<std::size_t>(std::floor(mu * m));
    Rng stream = rng.split(s);
    const PointSeq seq = sample_csa(params, domain, ell, stream, options.sampler);
    const auto mc_n = static_cast<std::size_t>(std::max(1.0, std::ceil(options.mc_per_volume * domain.volume())));
    const CsaStatistics stats = csa_statistics(seq, domain, params.radius(), n, mc_n, stream);

    ProfileRow row;
    row.scale = m;
    row.length = ell;
    for (std::size_t j = 0; j <= n; ++j) {
      row.t_over_m.push_back(static_cast<double>(stats.t[j]) / m);
      row.gamma_over_m.push_back(stats.gamma_terminal[j] / m);
    }
    // gamma_j(lambda) ~ Gamma_{j, floor(lambda m)} / m; the ratio in the
    // integrand is scale-free, so the raw columns are used directly.
    auto column = [&](std::size_t k, std::size_t j) {
      return k < ell ? stats.gamma[j][k] : stats.gamma_terminal[j];
    };
    auto integrand = [&](double lambda, std::size_t j) {
      const auto k = std::min(ell, static_cast<std::size_t>(std::floor(lambda * m)));
      double d = column(k, 0);
      for (std::size_t i = 1; i <= n; ++i) d += params.rate(i) * column(k, i);
      return d > 0.0 ? params.rate(j) * column(k, j) / d : 0.0;
    };
    const std::size_t nodes = options.quadrature_nodes > 0 ? options.quadrature_nodes : std::max<std::size_t>(ell, 1);
    const double h = mu / static_cast<double>(nodes);
    for (std::size_t j = 1; j <= n; ++j) {
      double integral = 0.0;
      for (std::size_t q = 0; q < nodes; ++q) {
        const double a = static_cast<double>(q) * h;
        integral += 0.5 * h * (integrand(a, j) + integrand(a + h, j));
      }
      row.residuals.push_back(row.t_over_m[j] - integral);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace csa
