#pragma once

// Cell-centered rectangular grids in one or two dimensions, grid functions,
// and the discrete differential operators with homogeneous Neumann boundary
// handling (mirror ghost cells).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kwc {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class Grid {
public:
  static constexpr int kMinCells = 4;

  Grid() = default;

  Grid(int dim, std::vector<int> cells, std::vector<double> extents) : dim_(dim) {
    if (dim != 1 && dim != 2)
      throw Error("grid: dim must be 1 or 2, got " + std::to_string(dim));
    if (static_cast<int>(cells.size()) != dim || static_cast<int>(extents.size()) != dim)
      throw Error("grid: cells/extents must have one entry per axis");
    for (int a = 0; a < dim; ++a) {
      if (cells[a] < kMinCells)
        throw Error("grid: need at least 4 cells per axis, got " + std::to_string(cells[a]));
      if (!(extents[a] > 0.0) || !std::isfinite(extents[a]))
        throw Error("grid: extents must be positive and finite");
      cells_[a] = cells[a];
      extents_[a] = extents[a];
      spacing_[a] = extents[a] / cells[a];
    }
  }

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_[axis]; }
  double extent(int axis) const { return extents_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  int nx() const { return cells_[0]; }
  int ny() const { return cells_[1]; }

  std::size_t size() const { return static_cast<std::size_t>(cells_[0]) * cells_[1]; }
  double cell_volume() const { return spacing_[0] * spacing_[1]; }
  double measure() const { return extents_[0] * extents_[1]; }

  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(cells_[0]) * j;
  }
  double center(int axis, int i) const { return (i + 0.5) * spacing_[axis]; }

  std::vector<int> cells_vector() const { return {cells_.begin(), cells_.begin() + dim_}; }
  std::vector<double> extents_vector() const { return {extents_.begin(), extents_.begin() + dim_}; }

  /// Faces normal to `axis`, including the two boundary layers.
  std::size_t face_count(int axis) const {
    if (axis >= dim_) return 0;
    return axis == 0 ? static_cast<std::size_t>(cells_[0] + 1) * cells_[1]
                     : static_cast<std::size_t>(cells_[0]) * (cells_[1] + 1);
  }
  std::size_t x_face(int a, int j) const { return static_cast<std::size_t>(a) + static_cast<std::size_t>(cells_[0] + 1) * j; }
  std::size_t y_face(int i, int b) const { return static_cast<std::size_t>(i) + static_cast<std::size_t>(cells_[0]) * b; }

  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && cells_ == o.cells_ && extents_ == o.extents_;
  }

private:
  int dim_ = 1;
  // The unused second axis of a 1D grid is a single cell of unit width so
  // that volumes and indexing need no special cases.
  std::array<int, 2> cells_{kMinCells, 1};
  std::array<double, 2> extents_{1.0, 1.0};
  std::array<double, 2> spacing_{1.0 / kMinCells, 1.0};
};

inline Grid build_grid(int dim, std::vector<int> cells, std::vector<double> extents) {
  return Grid(dim, std::move(cells), std::move(extents));
}

class ScalarField {
public:
  ScalarField() = default;
  explicit ScalarField(const Grid& grid, double value = 0.0) : grid_(grid), values_(grid.size(), value) {}
  ScalarField(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw Error("scalar field: value count does not match grid");
  }

  template <class F>
  static ScalarField sample(const Grid& grid, F&& f) {
    ScalarField out(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i) {
        double x = grid.center(0, i);
        double y = grid.dim() == 2 ? grid.center(1, j) : 0.0;
        out[grid.index(i, j)] = f(x, y);
      }
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(int i, int j = 0) { return values_[grid_.index(i, j)]; }
  double at(int i, int j = 0) const { return values_[grid_.index(i, j)]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  ScalarField& operator+=(const ScalarField& o) { check(o); for (std::size_t k = 0; k < size(); ++k) values_[k] += o.values_[k]; return *this; }
  ScalarField& operator-=(const ScalarField& o) { check(o); for (std::size_t k = 0; k < size(); ++k) values_[k] -= o.values_[k]; return *this; }
  ScalarField& operator*=(double s) { for (double& v : values_) v *= s; return *this; }
  ScalarField& operator+=(double s) { for (double& v : values_) v += s; return *this; }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  /// Pointwise map.
  template <class F>
  ScalarField map(F&& f) const {
    ScalarField out(grid_);
    for (std::size_t k = 0; k < size(); ++k) out.values_[k] = f(values_[k]);
    return out;
  }

  bool operator==(const ScalarField& o) const { return grid_ == o.grid_ && values_ == o.values_; }

  void check(const ScalarField& o) const {
    if (!(grid_ == o.grid_)) throw Error("field grid mismatch");
  }

private:
  Grid grid_;
  std::vector<double> values_;
};

inline ScalarField pointwise_product(const ScalarField& a, const ScalarField& b) {
  a.check(b);
  ScalarField out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

// Face-valued vector field: component `axis` lives on the faces normal to
// that axis. Boundary faces carry the zero-flux value and are ignored by div.
class VectorField {
public:
  VectorField() = default;
  explicit VectorField(const Grid& grid) : grid_(grid) {
    for (int a = 0; a < grid.dim(); ++a) faces_[a].assign(grid.face_count(a), 0.0);
  }

  const Grid& grid() const { return grid_; }
  int components() const { return grid_.dim(); }
  std::vector<double>& component(int axis) { return faces_[axis]; }
  const std::vector<double>& component(int axis) const { return faces_[axis]; }

  bool all_finite() const {
    for (int a = 0; a < grid_.dim(); ++a)
      for (double v : faces_[a])
        if (!std::isfinite(v)) return false;
    return true;
  }

  template <class F>
  static VectorField sample(const Grid& grid, F&& f) {
    VectorField out(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int a = 0; a <= grid.nx(); ++a) {
        double y = grid.dim() == 2 ? grid.center(1, j) : 0.0;
        out.faces_[0][grid.x_face(a, j)] = f(0, a * grid.spacing(0), y);
      }
    if (grid.dim() == 2)
      for (int b = 0; b <= grid.ny(); ++b)
        for (int i = 0; i < grid.nx(); ++i)
          out.faces_[1][grid.y_face(i, b)] = f(1, grid.center(0, i), b * grid.spacing(1));
    return out;
  }

private:
  Grid grid_;
  std::array<std::vector<double>, 2> faces_;
};

/// Face gradient; boundary faces are zero (mirror ghost values).
inline VectorField grad(const ScalarField& f) {
  const Grid& g = f.grid();
  VectorField out(g);
  auto& gx = out.component(0);
  const double hx = g.spacing(0);
  for (int j = 0; j < g.ny(); ++j)
    for (int a = 1; a < g.nx(); ++a)
      gx[g.x_face(a, j)] = (f.at(a, j) - f.at(a - 1, j)) / hx;
  if (g.dim() == 2) {
    auto& gy = out.component(1);
    const double hy = g.spacing(1);
    for (int b = 1; b < g.ny(); ++b)
      for (int i = 0; i < g.nx(); ++i)
        gy[g.y_face(i, b)] = (f.at(i, b) - f.at(i, b - 1)) / hy;
  }
  return out;
}

/// Divergence with zero flux through the boundary; the negative adjoint of grad.
inline ScalarField div(const VectorField& F) {
  const Grid& g = F.grid();
  ScalarField out(g);
  const auto& fx = F.component(0);
  const double hx = g.spacing(0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      double right = i + 1 < g.nx() ? fx[g.x_face(i + 1, j)] : 0.0;
      double left = i > 0 ? fx[g.x_face(i, j)] : 0.0;
      out.at(i, j) = (right - left) / hx;
    }
  if (g.dim() == 2) {
    const auto& fy = F.component(1);
    const double hy = g.spacing(1);
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        double top = j + 1 < g.ny() ? fy[g.y_face(i, j + 1)] : 0.0;
        double bottom = j > 0 ? fy[g.y_face(i, j)] : 0.0;
        out.at(i, j) += (top - bottom) / hy;
      }
  }
  return out;
}

/// Compact five-point (three-point in 1D) Neumann Laplacian, equal to div(grad f).
inline ScalarField laplacian_neumann(const ScalarField& f) {
  const Grid& g = f.grid();
  ScalarField out(g);
  const double ix2 = 1.0 / (g.spacing(0) * g.spacing(0));
  const double iy2 = g.dim() == 2 ? 1.0 / (g.spacing(1) * g.spacing(1)) : 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      double c = f.at(i, j);
      double acc = 0.0;
      if (i > 0) acc += (f.at(i - 1, j) - c) * ix2;
      if (i + 1 < g.nx()) acc += (f.at(i + 1, j) - c) * ix2;
      if (g.dim() == 2) {
        if (j > 0) acc += (f.at(i, j - 1) - c) * iy2;
        if (j + 1 < g.ny()) acc += (f.at(i, j + 1) - c) * iy2;
      }
      out.at(i, j) = acc;
    }
  return out;
}

inline double inner_h(const ScalarField& f, const ScalarField& g) {
  f.check(g);
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
  return s * f.grid().cell_volume();
}

/// Face inner product; boundary faces carry no weight.
inline double inner(const VectorField& F, const VectorField& G) {
  const Grid& g = F.grid();
  if (!(g == G.grid())) throw Error("vector field grid mismatch");
  double s = 0.0;
  const auto& fx = F.component(0);
  const auto& gx = G.component(0);
  for (int j = 0; j < g.ny(); ++j)
    for (int a = 1; a < g.nx(); ++a) s += fx[g.x_face(a, j)] * gx[g.x_face(a, j)];
  if (g.dim() == 2) {
    const auto& fy = F.component(1);
    const auto& gy = G.component(1);
    for (int b = 1; b < g.ny(); ++b)
      for (int i = 0; i < g.nx(); ++i) s += fy[g.y_face(i, b)] * gy[g.y_face(i, b)];
  }
  return s * g.cell_volume();
}

inline double norm_h(const ScalarField& f) { return std::sqrt(inner_h(f, f)); }

/// Squared H-seminorm of the face gradient, Σ|grad f|² · vol.
inline double dirichlet_seminorm_sq(const ScalarField& f) {
  VectorField d = grad(f);
  return inner(d, d);
}

inline double norm_v(const ScalarField& f) {
  return std::sqrt(inner_h(f, f) + dirichlet_seminorm_sq(f));
}

/// Surrogate H² norm |−Δ_N f + f|_H.
inline double norm_h2(const ScalarField& f) {
  ScalarField r = f;
  r -= laplacian_neumann(f);
  return norm_h(r);
}

/// Mean over the domain.
inline double mean(const ScalarField& f) {
  double s = std::accumulate(f.data().begin(), f.data().end(), 0.0);
  return s / static_cast<double>(f.size());
}

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace kwc
