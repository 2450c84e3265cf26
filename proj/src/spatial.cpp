#include "csa/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "csa/errors.hpp"

namespace csa {

Domain::Domain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw InvalidArgument("domain bounds must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw InvalidArgument("domain requires finite lower[i] < upper[i]");
    }
  }
}

Domain Domain::unit_cube(std::size_t dim) { return cube(dim, 1.0); }

Domain Domain::cube(std::size_t dim, double side) {
  return Domain(std::vector<double>(dim, 0.0), std::vector<double>(dim, side));
}

double Domain::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lower_.size(); ++i) v *= side(i);
  return v;
}

bool Domain::contains(std::span<const double> x) const {
  if (x.size() != lower_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
  }
  return true;
}

Domain Domain::rescaled(double m) const {
  if (!(m > 0.0)) throw InvalidArgument("rescale factor must be positive");
  const double f = std::pow(m, 1.0 / static_cast<double>(dimension()));
  std::vector<double> lo(lower_), hi(upper_);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] *= f;
    hi[i] *= f;
  }
  return Domain(std::move(lo), std::move(hi));
}

void Domain::sample_uniform(Rng& rng, std::span<double> out) const {
  for (std::size_t i = 0; i < lower_.size(); ++i) out[i] = rng.uniform(lower_[i], upper_[i]);
}

void PointSet::push_back(std::span<const double> x) {
  if (x.size() != dim_) throw DimensionMismatch("point dimension does not match the set");
  coords_.insert(coords_.end(), x.begin(), x.end());
}

void PointSet::swap_remove(std::size_t i) {
  const std::size_t n = size();
  if (i + 1 != n) {
    std::copy_n(coords_.begin() + static_cast<std::ptrdiff_t>((n - 1) * dim_), dim_,
                coords_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
  }
  coords_.resize((n - 1) * dim_);
}

PointSet PointSet::prefix(std::size_t n) const {
  PointSet out(dim_);
  out.coords_.assign(coords_.begin(), coords_.begin() + static_cast<std::ptrdiff_t>(n * dim_));
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t neighbour_count(std::span<const double> x, const PointSet& config, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("interaction radius must be positive");
  if (config.empty()) return 0;
  if (x.size() != config.dim()) throw DimensionMismatch("query point dimension differs from set");
  const double r2 = radius * radius;
  std::size_t count = 0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (squared_distance(x, config[i]) <= r2) ++count;
  }
  return count;
}

namespace {
constexpr double kMaxCells = 4.0e6;
}

NeighbourGrid::NeighbourGrid(const Domain& domain, double radius)
    : dim_(domain.dimension()),
      radius_(radius),
      radius2_(radius * radius),
      origin_(domain.lower()),
      cell_side_(dim_),
      cells_per_dim_(dim_) {
  if (!(radius > 0.0)) throw InvalidArgument("interaction radius must be positive");
  // Cells of side exactly `radius` unless that would exceed the cell budget;
  // a larger side is still correct, only slower.
  double side = radius;
  while (true) {
    double total = 1.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      total *= std::max(1.0, std::floor(domain.side(i) / side));
    }
    if (total <= kMaxCells) break;
    side *= 1.5;
  }
  std::size_t total = 1;
  for (std::size_t i = 0; i < dim_; ++i) {
    const long n = std::max(1L, static_cast<long>(std::floor(domain.side(i) / side)));
    cells_per_dim_[i] = n;
    cell_side_[i] = domain.side(i) / static_cast<double>(n);
    total *= static_cast<std::size_t>(n);
  }
  cells_.resize(total);
}

std::vector<long> NeighbourGrid::cell_coords(std::span<const double> x) const {
  std::vector<long> c(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    const long k = static_cast<long>(std::floor((x[i] - origin_[i]) / cell_side_[i]));
    c[i] = std::clamp(k, 0L, cells_per_dim_[i] - 1);
  }
  return c;
}

std::size_t NeighbourGrid::cell_of(std::span<const double> x) const {
  const std::vector<long> c = cell_coords(x);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    flat = flat * static_cast<std::size_t>(cells_per_dim_[i]) + static_cast<std::size_t>(c[i]);
  }
  return flat;
}

void NeighbourGrid::insert(std::size_t index, std::span<const double> x) {
  if (x.size() != dim_) throw DimensionMismatch("point dimension differs from grid");
  cells_[cell_of(x)].push_back(index);
}

void NeighbourGrid::erase(std::size_t index, std::span<const double> x) {
  auto& cell = cells_[cell_of(x)];
  auto it = std::find(cell.begin(), cell.end(), index);
  if (it != cell.end()) {
    *it = cell.back();
    cell.pop_back();
  }
}

void NeighbourGrid::relabel(std::size_t from, std::size_t to, std::span<const double> x) {
  auto& cell = cells_[cell_of(x)];
  std::replace(cell.begin(), cell.end(), from, to);
}

void NeighbourGrid::clear() {
  for (auto& cell : cells_) cell.clear();
}

std::size_t NeighbourGrid::count(std::span<const double> x, const PointSet& points) const {
  if (x.size() != dim_) throw DimensionMismatch("query point dimension differs from grid");
  std::size_t n = 0;
  for_each_neighbour(x, points, [&n](std::size_t) { ++n; });
  return n;
}

PointSet read_points_csv(std::istream& in) {
  std::string line;
  // Leading '#' lines are metadata.
  do {
    if (!std::getline(in, line)) throw IoError("point CSV is empty; header row x1..xd required");
    if (!line.empty() && line.back() == '\r') line.pop_back();
  } while (!line.empty() && line.front() == '#');
  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      ++dim;
      if (cell != "x" + std::to_string(dim)) {
        throw IoError("point CSV header must be x1,...,xd; got '" + line + "'");
      }
    }
  }
  if (dim == 0) throw IoError("point CSV header has no columns");
  PointSet points(dim);
  std::vector<double> x(dim);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ss, cell, ',')) {
      if (i >= dim) throw IoError("too many columns on row " + std::to_string(row));
      try {
        std::size_t used = 0;
        x[i] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IoError("bad number '" + cell + "' on row " + std::to_string(row));
      }
      ++i;
    }
    if (i != dim) throw IoError("too few columns on row " + std::to_string(row));
    points.push_back(x);
  }
  return points;
}

PointSet read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_points_csv(in);
}

void write_points_csv(std::ostream& out, const PointSet& points) {
  for (std::size_t i = 0; i < points.dim(); ++i) {
    out << (i ? "," : "") << 'x' << (i + 1);
  }
  out << '\n';
  char buf[32];
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto x = points[p];
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", x[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace csa
