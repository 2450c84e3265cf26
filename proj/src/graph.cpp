#include "csa/graph.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "csa/errors.hpp"

namespace csa {

Graph::Graph(std::size_t n, const std::vector<Edge>& edges) : adj_(n) {
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw InvalidArgument("edge endpoint out of range");
    if (u == v) throw InvalidArgument("self-loops are not allowed");
    if (u > v) std::swap(u, v);
    if (std::find(adj_[u].begin(), adj_[u].end(), v) != adj_[u].end()) continue;
    adj_[u].push_back(v);
    adj_[v].push_back(u);
    edges_.emplace_back(u, v);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
  std::sort(edges_.begin(), edges_.end());

  // Components by BFS with 2-colouring.
  std::vector<int> colour(n, -1);
  std::size_t components = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (colour[s] >= 0) continue;
    ++components;
    bool bipartite = true;
    bool has_edge = false;
    std::vector<std::size_t> queue{s};
    colour[s] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t u = queue[head];
      for (std::size_t w : adj_[u]) {
        has_edge = true;
        if (colour[w] < 0) {
          colour[w] = 1 - colour[u];
          queue.push_back(w);
        } else if (colour[w] == colour[u]) {
          bipartite = false;
        }
      }
    }
    if (bipartite && has_edge) bipartite_component_ = true;
  }
  connected_ = components <= 1;
}

bool Graph::adjacent(std::size_t u, std::size_t v) const {
  return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
}

std::size_t Graph::min_degree() const {
  std::size_t d = adj_.empty() ? 0 : adj_[0].size();
  for (const auto& nb : adj_) d = std::min(d, nb.size());
  return d;
}

std::size_t Graph::max_degree() const {
  std::size_t d = 0;
  for (const auto& nb : adj_) d = std::max(d, nb.size());
  return d;
}

std::uint64_t Graph::neighbour_mask(std::size_t v) const {
  std::uint64_t m = 0;
  for (std::size_t w : adj_[v]) m |= std::uint64_t{1} << w;
  return m;
}

Graph Graph::with_label(std::string label, std::optional<double> exact) const {
  Graph g(*this);
  g.label_ = std::move(label);
  g.exact_lambda1_ = exact;
  return g;
}

Graph make_family(GraphFamily kind, std::size_t size) {
  std::vector<Edge> edges;
  switch (kind) {
    case GraphFamily::Cycle: {
      if (size < 3) throw BadSize("a cycle needs at least 3 vertices");
      for (std::size_t i = 0; i < size; ++i) edges.emplace_back(i, (i + 1) % size);
      return Graph(size, edges).with_label("cycle:" + std::to_string(size), 2.0);
    }
    case GraphFamily::Star: {
      if (size < 1) throw BadSize("a star K_{1,m} needs m >= 1");
      for (std::size_t i = 1; i <= size; ++i) edges.emplace_back(0, i);
      return Graph(size + 1, edges)
          .with_label("star:" + std::to_string(size), std::sqrt(static_cast<double>(size)));
    }
    case GraphFamily::Path: {
      if (size < 1) throw BadSize("a path needs at least 1 vertex");
      for (std::size_t i = 0; i + 1 < size; ++i) edges.emplace_back(i, i + 1);
      return Graph(size, edges)
          .with_label("path:" + std::to_string(size),
                      2.0 * std::cos(std::numbers::pi / static_cast<double>(size + 1)));
    }
    case GraphFamily::Complete: {
      if (size < 1) throw BadSize("a complete graph needs at least 1 vertex");
      for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = i + 1; j < size; ++j) edges.emplace_back(i, j);
      }
      return Graph(size, edges)
          .with_label("complete:" + std::to_string(size), static_cast<double>(size) - 1.0);
    }
  }
  throw InvalidArgument("unknown graph family");
}

Graph parse_graph_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw InvalidArgument("graph spec must look like 'kind:size' or 'file:path', got '" + spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (kind == "file") {
    std::ifstream in(arg);
    if (!in) throw IoError("cannot open edge list " + arg);
    return read_edge_list(in).with_label(spec, std::nullopt);
  }
  std::size_t size = 0;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(arg, &used);
    if (used != arg.size() || v < 0) throw std::invalid_argument(arg);
    size = static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InvalidArgument("bad graph size '" + arg + "'");
  }
  if (kind == "cycle") return make_family(GraphFamily::Cycle, size);
  if (kind == "star") return make_family(GraphFamily::Star, size);
  if (kind == "path") return make_family(GraphFamily::Path, size);
  if (kind == "complete") return make_family(GraphFamily::Complete, size);
  throw InvalidArgument("unknown graph family '" + kind + "'");
}

Graph read_edge_list(std::istream& in, std::size_t num_vertices) {
  std::vector<Edge> edges;
  std::size_t n = num_vertices;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    long long u = 0, v = 0;
    if (!(ss >> u)) continue;
    std::string rest;
    if (!(ss >> v) || (ss >> rest) || u < 0 || v < 0) {
      throw IoError("edge list line " + std::to_string(lineno) + " is not a 'u v' pair");
    }
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    n = std::max(n, static_cast<std::size_t>(std::max(u, v)) + 1);
  }
  return Graph(n, edges);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# " << g.num_vertices() << " vertices\n";
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

namespace {

Eigen::MatrixXd adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (auto [u, v] : g.edges()) {
    a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = 1.0;
    a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = 1.0;
  }
  return a;
}

// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly greater
// than x: sign changes of the Sturm sequence of its leading characteristic
// polynomials p_k(x), tracked through the ratios q_k = p_k / p_{k-1}.
std::size_t eigenvalues_above(const Eigen::VectorXd& d, const Eigen::VectorXd& e, double x) {
  std::size_t below = 0;
  double q = 1.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double off = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
    q = d[i] - x - (i == 0 ? 0.0 : off / q);
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++below;
  }
  return static_cast<std::size_t>(d.size()) - below;
}

}  // namespace

double lambda1_bracketed(const Graph& g, double tol) {
  if (g.num_edges() == 0) throw EmptyGraph("lambda1 needs at least one edge");
  // Orthogonal reduction to tridiagonal form keeps the characteristic polynomial.
  const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(adjacency(g));
  const Eigen::VectorXd d = tri.diagonal();
  const Eigen::VectorXd e = tri.subDiagonal();
  // All eigenvalues lie in [-maxdeg, maxdeg]; lambda1 >= 1 once an edge exists.
  double lo = 1.0 - 1e-9;
  double hi = static_cast<double>(g.max_degree()) + 1e-9;
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (eigenvalues_above(d, e, mid) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double lambda1(const Graph& g, double tol) {
  if (g.num_edges() == 0) throw EmptyGraph("lambda1 needs at least one edge");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  const std::size_t n = g.num_vertices();
  const double shift = g.has_bipartite_component() ? static_cast<double>(g.max_degree()) : 0.0;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> w(n);
  double estimate = 0.0;
  for (std::size_t it = 0; it < 10'000'000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = shift * v[i];
      for (std::size_t j : g.neighbours(i)) s += v[j];
      w[i] = s;
    }
    // Rayleigh quotient (v has unit norm) and residual of the shifted operator.
    double rq = 0.0;
    for (std::size_t i = 0; i < n; ++i) rq += v[i] * w[i];
    double res2 = 0.0, norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = w[i] - rq * v[i];
      res2 += r * r;
      norm2 += w[i] * w[i];
    }
    estimate = rq - shift;
    if (std::sqrt(res2) <= tol * std::abs(rq)) break;
    const double norm = std::sqrt(norm2);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  if (n <= 12) {
    const double check = lambda1_bracketed(g);
    if (std::abs(check - estimate) > 1e-6 * std::max(1.0, check)) {
      throw Error("NumericalError", "power iteration (" + std::to_string(estimate) +
                                        ") disagrees with eigenvalue bracketing (" +
                                        std::to_string(check) + ")");
    }
  }
  return estimate;
}

namespace {

void check_cap(const Graph& g, std::size_t cap) {
  if (g.num_vertices() > cap || g.num_vertices() > 64) {
    throw TooLarge("exact routine capped at " + std::to_string(std::min<std::size_t>(cap, 64)) +
                   " vertices, graph has " + std::to_string(g.num_vertices()));
  }
}

struct IndependentSetSearch {
  std::vector<std::uint64_t> nbr;
  int best = 0;

  void run(std::uint64_t candidates, int size) {
    if (candidates == 0) {
      best = std::max(best, size);
      return;
    }
    if (size + std::popcount(candidates) <= best) return;
    // A vertex with at most one neighbour among the candidates is always in
    // some maximum independent set of the candidate subgraph.
    std::uint64_t rest = candidates;
    int pick = -1, pick_deg = -1;
    while (rest) {
      const int v = std::countr_zero(rest);
      rest &= rest - 1;
      const int deg = std::popcount(nbr[static_cast<std::size_t>(v)] & candidates);
      if (deg <= 1) {
        run(candidates & ~(nbr[static_cast<std::size_t>(v)] | (std::uint64_t{1} << v)), size + 1);
        return;
      }
      if (deg > pick_deg) {
        pick_deg = deg;
        pick = v;
      }
    }
    const std::uint64_t bit = std::uint64_t{1} << pick;
    run(candidates & ~(nbr[static_cast<std::size_t>(pick)] | bit), size + 1);
    run(candidates & ~bit, size);
  }
};

struct CliqueSearch {
  std::vector<std::uint64_t> nbr;
  std::vector<std::vector<std::size_t>> found;

  void run(std::uint64_t r, std::uint64_t p, std::uint64_t x) {
    if (p == 0 && x == 0) {
      std::vector<std::size_t> clique;
      for (std::uint64_t b = r; b; b &= b - 1) clique.push_back(static_cast<std::size_t>(std::countr_zero(b)));
      found.push_back(std::move(clique));
      return;
    }
    // Pivot: the vertex of P u X with most neighbours in P.
    int pivot = -1, best = -1;
    for (std::uint64_t b = p | x; b; b &= b - 1) {
      const int u = std::countr_zero(b);
      const int c = std::popcount(p & nbr[static_cast<std::size_t>(u)]);
      if (c > best) {
        best = c;
        pivot = u;
      }
    }
    for (std::uint64_t b = p & ~nbr[static_cast<std::size_t>(pivot)]; b; b &= b - 1) {
      const int v = std::countr_zero(b);
      const std::uint64_t bit = std::uint64_t{1} << v;
      const std::uint64_t nv = nbr[static_cast<std::size_t>(v)];
      run(r | bit, p & nv, x & nv);
      p &= ~bit;
      x |= bit;
    }
  }
};

}  // namespace

std::size_t independence_number(const Graph& g, std::size_t cap) {
  check_cap(g, cap);
  const std::size_t n = g.num_vertices();
  if (n == 0) return 0;
  IndependentSetSearch search;
  for (std::size_t v = 0; v < n; ++v) search.nbr.push_back(g.neighbour_mask(v));
  const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  search.run(all, 0);
  return static_cast<std::size_t>(search.best);
}

std::vector<std::vector<std::size_t>> maximal_cliques(const Graph& g, std::size_t cap) {
  check_cap(g, cap);
  const std::size_t n = g.num_vertices();
  if (n == 0) return {};
  CliqueSearch search;
  for (std::size_t v = 0; v < n; ++v) search.nbr.push_back(g.neighbour_mask(v));
  const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  search.run(0, all, 0);
  std::sort(search.found.begin(), search.found.end());
  return search.found;
}

bool is_clique(const Graph& g, const std::vector<std::size_t>& vertices) {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (std::size_t j = i + 1; j < vertices.size(); ++j) {
      if (!g.adjacent(vertices[i], vertices[j])) return false;
    }
  }
  return true;
}

bool is_maximal_clique(const Graph& g, const std::vector<std::size_t>& vertices) {
  if (vertices.empty() || !is_clique(g, vertices)) return false;
  for (std::size_t w = 0; w < g.num_vertices(); ++w) {
    if (std::find(vertices.begin(), vertices.end(), w) != vertices.end()) continue;
    bool extends = true;
    for (std::size_t v : vertices) {
      if (!g.adjacent(v, w)) {
        extends = false;
        break;
      }
    }
    if (extends) return false;
  }
  return true;
}

}  // namespace csa
