#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "csa/rng.hpp"

namespace csa {

// Axis-aligned box in R^d. Containment is closed-box membership.
class Domain {
 public:
  Domain(std::vector<double> lower, std::vector<double> upper);

  static Domain unit_cube(std::size_t dim);
  // The box [0, side]^dim.
  static Domain cube(std::size_t dim, double side);

  std::size_t dimension() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double side(std::size_t i) const { return upper_[i] - lower_[i]; }
  double volume() const;
  bool contains(std::span<const double> x) const;

  // m^{1/d} * D: the box scaled about the origin so its volume grows by `m`.
  Domain rescaled(double m) const;

  void sample_uniform(Rng& rng, std::span<double> out) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

inline double volume(const Domain& domain) { return domain.volume(); }

// Flat storage of points of a fixed dimension. Used both as an ordered
// arrival sequence (time-series model) and as an unordered configuration.
class PointSet {
 public:
  explicit PointSet(std::size_t dim = 2) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  void push_back(std::span<const double> x);
  // Removes point i by moving the last point into its slot.
  void swap_remove(std::size_t i);
  void clear() { coords_.clear(); }
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }
  // First `n` points in order.
  PointSet prefix(std::size_t n) const;

  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

// The arrival-ordered sequence x(l) = (x_1, ..., x_l).
using PointSeq = PointSet;

double squared_distance(std::span<const double> a, std::span<const double> b);

// #{y in config : |x - y| <= radius}. Naive scan; the reference semantics.
std::size_t neighbour_count(std::span<const double> x, const PointSet& config, double radius);

// Uniform grid with cells of side >= radius over a domain. Stores indices into
// an external PointSet; all queries take that set by reference. Results are
// identical to the naive scan.
class NeighbourGrid {
 public:
  NeighbourGrid(const Domain& domain, double radius);

  void insert(std::size_t index, std::span<const double> x);
  void erase(std::size_t index, std::span<const double> x);
  // Point `from` was moved to slot `to` (as PointSet::swap_remove does).
  void relabel(std::size_t from, std::size_t to, std::span<const double> x);
  void clear();

  // Calls visit(j) for every stored j with |x - points[j]| <= radius.
  template <typename Visit>
  void for_each_neighbour(std::span<const double> x, const PointSet& points,
                          Visit&& visit) const {
    const std::vector<long> centre = cell_coords(x);
    std::vector<long> offset(dim_, -1);
    while (true) {
      std::size_t flat = 0;
      bool inside = true;
      for (std::size_t i = 0; i < dim_; ++i) {
        const long c = centre[i] + offset[i];
        if (c < 0 || c >= cells_per_dim_[i]) {
          inside = false;
          break;
        }
        flat = flat * static_cast<std::size_t>(cells_per_dim_[i]) + static_cast<std::size_t>(c);
      }
      if (inside) {
        for (std::size_t j : cells_[flat]) {
          if (squared_distance(x, points[j]) <= radius2_) visit(j);
        }
      }
      std::size_t i = 0;
      while (i < dim_ && offset[i] == 1) offset[i++] = -1;
      if (i == dim_) break;
      ++offset[i];
    }
  }
  std::size_t count(std::span<const double> x, const PointSet& points) const;

  double radius() const { return radius_; }

 private:
  std::size_t cell_of(std::span<const double> x) const;
  std::vector<long> cell_coords(std::span<const double> x) const;

  std::size_t dim_;
  double radius_;
  double radius2_;
  std::vector<double> origin_;
  std::vector<double> cell_side_;
  std::vector<long> cells_per_dim_;
  std::vector<std::vector<std::size_t>> cells_;
};

// CSV with a header row x1..xd and one point per row. Reading skips leading
// lines that start with '#'.
PointSet read_points_csv(std::istream& in);
PointSet read_points_csv(const std::string& path);
void write_points_csv(std::ostream& out, const PointSet& points);

}  // namespace csa
