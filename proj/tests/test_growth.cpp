#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "csa/errors.hpp"
#include "csa/growth.hpp"

using namespace csa;

TEST_CASE("step distribution closed cases") {
  const Graph single(1, {});
  CHECK(growth_step_distribution(single, 2.0, 1.0, {{5}, 0}) == std::vector<double>{1.0});

  const auto uniform = growth_step_distribution(make_family(GraphFamily::Cycle, 6), 1.3, -0.4, {Counts(6, 0), 0});
  for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 6.0));

  // alpha x_v + beta sum_{u~v} x_u = (2+1, 1+2, 0+3).
  const auto k3 = growth_step_distribution(make_family(GraphFamily::Complete, 3), 1.0, 1.0, {{2, 1, 0}, 0});
  for (double p : k3) CHECK(p == doctest::Approx(1.0 / 3.0));

  const auto path = growth_step_distribution(make_family(GraphFamily::Path, 3), 0.5, -1.0, {{1, 0, 2}, 0});
  const double w0 = std::exp(0.5), w1 = std::exp(-3.0), w2 = std::exp(1.0);
  CHECK(path[0] == doctest::Approx(w0 / (w0 + w1 + w2)));
  CHECK(path[1] == doctest::Approx(w1 / (w0 + w1 + w2)));
}

TEST_CASE("step distribution is overflow safe") {
  Rng rng(4);
  const Graph g = make_family(GraphFamily::Cycle, 7);
  for (int rep = 0; rep < 200; ++rep) {
    Counts x(7);
    for (auto& c : x) c = rng.uniform_int(10001);
    const auto p = growth_step_distribution(g, rng.uniform(-3, 3), rng.uniform(-3, 3), {x, 0});
    double s = 0.0;
    for (double q : p) {
      CHECK(std::isfinite(q));
      s += q;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("simulation bookkeeping") {
  const Graph g = make_family(GraphFamily::Star, 3);
  Rng rng(1);
  const auto none = simulate_growth(g, 1.0, 1.0, {1, 2, 3, 4}, 0, rng);
  REQUIRE(none.snapshots.size() == 1);
  CHECK(none.final_state().counts == Counts{1, 2, 3, 4});

  GrowthOptions thin;
  thin.thin = 7;
  const auto traj = simulate_growth(g, 0.2, 0.1, {1, 0, 0, 0}, 100, rng, thin);
  for (const auto& s : traj.snapshots) {
    CHECK(std::accumulate(s.counts.begin(), s.counts.end(), std::uint64_t{0}) == 1 + s.step);
  }
  CHECK(traj.final_state().step == 100);
  CHECK(traj.at_or_before(50).step == 49);
  CHECK_THROWS_AS(simulate_growth(g, 1, 1, {0, 0}, 5, rng), DimensionMismatch);
}

TEST_CASE("first step frequencies match the step distribution") {
  const Graph g = make_family(GraphFamily::Path, 3);
  const GrowthState s{{1, 2, 0}, 0};
  const auto p = growth_step_distribution(g, 0.3, 0.7, s);
  const int runs = 100000;
  std::vector<double> freq(3, 0.0);
  Rng base(99);
  for (int r = 0; r < runs; ++r) {
    Rng rng = base.split(static_cast<std::uint64_t>(r));
    const auto t = simulate_growth(g, 0.3, 0.7, s.counts, 1, rng);
    for (std::size_t v = 0; v < 3; ++v) {
      if (t.final_state().counts[v] != s.counts[v]) freq[v] += 1.0;
    }
  }
  double chi2 = 0.0;
  for (std::size_t v = 0; v < 3; ++v) chi2 += std::pow(freq[v] - runs * p[v], 2) / (runs * p[v]);
  // 0.1% critical value of chi-square with 2 degrees of freedom.
  CHECK(chi2 < 13.82);
}

TEST_CASE("beta = 0 couples exactly with the edgeless graph") {
  const Graph g = make_family(GraphFamily::Cycle, 5);
  const Graph empty(5, {});
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng a = Rng(3).split(s), b = Rng(3).split(s);
    const auto ta = simulate_growth(g, 0.4, 0.0, Counts(5, 0), 2000, a);
    const auto tb = simulate_growth(empty, 0.4, 0.0, Counts(5, 0), 2000, b);
    REQUIRE(ta.snapshots.size() == tb.snapshots.size());
    for (std::size_t i = 0; i < ta.snapshots.size(); ++i) CHECK(ta.snapshots[i].counts == tb.snapshots[i].counts);
  }
}

TEST_CASE("independent urns with alpha > 0 monopolise") {
  const Graph two(2, {});
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng = Rng(8).split(s);
    const auto t = simulate_growth(two, 1.0, 0.0, {0, 0}, 5000, rng, {100});
    const auto rep = detect_localisation(t, two, 1000);
    CHECK(rep.final_set.size() == 1);
    CHECK(rep.is_maximal_clique);
  }
}

TEST_CASE("localisation on the path and equalisation on K3") {
  const Graph path = make_family(GraphFamily::Path, 3);
  int on_edge = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng = Rng(12).split(s);
    const auto t = simulate_growth(path, 1.0, 1.0, Counts(3, 0), 20000, rng, {100});
    const auto rep = detect_localisation(t, path, default_window(t));
    if (rep.is_maximal_clique && rep.final_set.size() == 2) ++on_edge;
  }
  CHECK(on_edge >= 18);

  const Graph k3 = make_family(GraphFamily::Complete, 3);
  Rng rng(14);
  const auto t = simulate_growth(k3, 0.5, 1.0, Counts(3, 0), 30000, rng, {100});
  const auto rep = detect_localisation(t, k3, default_window(t));
  CHECK(rep.final_set == std::vector<std::size_t>{0, 1, 2});
  CHECK(rep.is_maximal_clique);
  for (const auto& [pair, r] : rep.ratio_estimates) CHECK(std::abs(r) < 0.05);
}

TEST_CASE("localisation edge cases") {
  const Graph single(1, {});
  Rng rng(2);
  const auto t = simulate_growth(single, 1.0, 1.0, {0}, 50, rng);
  const auto rep = detect_localisation(t, single, 10);
  CHECK(rep.final_set == std::vector<std::size_t>{0});
  CHECK(rep.is_maximal_clique);
  CHECK(rep.ratio_estimates.empty());
  CHECK_THROWS_AS(detect_localisation(t, single, 50), WindowTooLarge);
  CHECK(default_window(t) == 10);
}

TEST_CASE("min rule picks a brute-force argmin") {
  Rng rng(6);
  for (std::size_t m : {3u, 4u, 5u, 7u}) {
    Counts x(m, 0);
    for (auto& c : x) c = rng.uniform_int(5);
    Rng step_rng = rng.split(m);
    const auto choices = min_rule_choices(m, x, 200, step_rng);
    for (std::size_t v : choices) {
      std::uint64_t best = ~std::uint64_t{0};
      for (std::size_t i = 0; i < m; ++i) best = std::min(best, x[(i + m - 1) % m] + x[i] + x[(i + 1) % m]);
      CHECK(x[(v + m - 1) % m] + x[v] + x[(v + 1) % m] == best);
      ++x[v];
    }
  }
  CHECK_THROWS_AS(simulate_min_rule(2, {0, 0}, 1, rng), BadSize);
}

TEST_CASE("min rule first step is uniform on C4") {
  std::vector<double> freq(4, 0.0);
  const int runs = 40000;
  for (int r = 0; r < runs; ++r) {
    Rng rng = Rng(5).split(static_cast<std::uint64_t>(r));
    freq[min_rule_choices(4, Counts(4, 0), 1, rng)[0]] += 1.0;
  }
  double chi2 = 0.0;
  for (double f : freq) chi2 += std::pow(f - runs / 4.0, 2) / (runs / 4.0);
  CHECK(chi2 < 16.27);  // 0.1% critical value, 3 degrees of freedom
}

TEST_CASE("min rule on C4 settles on a non-adjacent pair") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng = Rng(10).split(s);
    const auto choices = min_rule_choices(4, Counts(4, 0), 2000, rng);
    const std::size_t a = choices[1000];
    for (std::size_t i = 1000; i < choices.size(); ++i) CHECK((choices[i] == a || choices[i] == (a + 2) % 4));
    // Alternation: the two active vertices are equal every other step.
    Counts x(4, 0);
    std::vector<bool> equal;
    for (std::size_t v : choices) {
      ++x[v];
      equal.push_back(x[a] == x[(a + 2) % 4]);
    }
    for (std::size_t i = 1000; i + 1 < equal.size(); ++i) CHECK((equal[i] || equal[i + 1]));
    CHECK((x[a] > x[(a + 2) % 4] ? x[a] - x[(a + 2) % 4] : x[(a + 2) % 4] - x[a]) <= 1);
  }
}

TEST_CASE("trajectory CSV") {
  Rng rng(1);
  const auto t = simulate_growth(make_family(GraphFamily::Path, 2), 0.0, 0.0, {0, 0}, 3, rng);
  std::stringstream ss;
  write_trajectory_csv(ss, t);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "step,v_0,v_1");
}
