#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace csa {

using Edge = std::pair<std::size_t, std::size_t>;

// Finite simple undirected graph on vertices 0..n-1. Immutable once built.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t n, const std::vector<Edge>& edges);

  std::size_t num_vertices() const { return adj_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbours(std::size_t v) const { return adj_[v]; }
  bool adjacent(std::size_t u, std::size_t v) const;
  std::size_t degree(std::size_t v) const { return adj_[v].size(); }
  std::size_t min_degree() const;
  std::size_t max_degree() const;
  bool connected() const { return connected_; }
  // True if some connected component is bipartite (and has an edge).
  bool has_bipartite_component() const { return bipartite_component_; }
  // Bit v of neighbour_mask(u) is set iff u ~ v. Needs n <= 64.
  std::uint64_t neighbour_mask(std::size_t v) const;

  // Closed-form Perron-Frobenius eigenvalue, known for the built-in families.
  const std::optional<double>& exact_lambda1() const { return exact_lambda1_; }
  const std::string& label() const { return label_; }

  Graph with_label(std::string label, std::optional<double> exact_lambda1) const;

 private:
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
  bool connected_ = true;
  bool bipartite_component_ = false;
  std::optional<double> exact_lambda1_;
  std::string label_;
};

enum class GraphFamily { Cycle, Star, Path, Complete };

// cycle:n (n >= 3), star:m (K_{1,m}, m >= 1, centre 0), path:n (n >= 1
// vertices), complete:n (n >= 1). Throws BadSize below the family minimum.
Graph make_family(GraphFamily kind, std::size_t size);

// "cycle:7", "star:4", "path:5", "complete:3", or "file:<edge list path>".
Graph parse_graph_spec(const std::string& spec);

// One "u v" (or "u,v") pair per line, '#' starts a comment. n = max index + 1
// unless `num_vertices` is larger.
Graph read_edge_list(std::istream& in, std::size_t num_vertices = 0);
void write_edge_list(std::ostream& out, const Graph& g);

// Largest adjacency eigenvalue by power iteration from the all-ones vector
// (shifted by the maximum degree when a bipartite component is present).
// For n <= 12 the result is checked against eigenvalue-count bisection.
double lambda1(const Graph& g, double tol = 1e-12);

// Largest root of det(xI - A) by bisection, counting roots above x with the
// Sturm sequence of the Householder tridiagonal form. Independent of lambda1.
double lambda1_bracketed(const Graph& g, double tol = 1e-13);

inline constexpr std::size_t kDefaultExactCap = 40;

// Exact independence number by branch and bound. Throws TooLarge for n > cap.
std::size_t independence_number(const Graph& g, std::size_t cap = kDefaultExactCap);

// All maximal cliques (Bron-Kerbosch with pivoting), each sorted ascending,
// the list sorted lexicographically. Throws TooLarge for n > cap.
std::vector<std::vector<std::size_t>> maximal_cliques(const Graph& g,
                                                      std::size_t cap = kDefaultExactCap);

bool is_clique(const Graph& g, const std::vector<std::size_t>& vertices);
bool is_maximal_clique(const Graph& g, const std::vector<std::size_t>& vertices);

}  // namespace csa
