#include "nanowire/grids.hpp"

#include <algorithm>

namespace nanowire {

namespace {
constexpr int kStencilWidth = 3;
}

AxialGrid::AxialGrid(int nodes, double len, double x0) : n(nodes), origin(x0), length(len) {
  require(nodes >= kStencilWidth, "axial grid needs at least 3 nodes, got " + std::to_string(nodes));
  require(len > 0.0, "axial length must be positive");
  h = len / (n - 1);
  weights = trapezoid_weights(n, h);
}

Vector AxialGrid::nodes() const {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = x(i);
  return v;
}

CrossSectionGrid::CrossSectionGrid(int nodes1, int nodes2, double w1, double w2)
    : n1(nodes1), n2(nodes2), width1(w1), width2(w2) {
  require(n1 >= kStencilWidth && n2 >= kStencilWidth, "cross-section needs at least 3 nodes per direction");
  require(w1 > 0.0 && w2 > 0.0, "cross-section widths must be positive");
  h1 = w1 / (n1 - 1);
  h2 = w2 / (n2 - 1);
  const Vector a = trapezoid_weights(n1, h1);
  const Vector b = trapezoid_weights(n2, h2);
  weights.resize(size());
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < n1; ++i1) weights(index(i1, i2)) = a(i1) * b(i2);
}

UnitCellGrid::UnitCellGrid(int ny, const CrossSectionGrid& section) : n_y(ny), cross(section) {
  require(ny >= kStencilWidth, "periodic direction needs at least 3 nodes");
  h_y = 1.0 / n_y;
}

DeviceGrid::DeviceGrid(const AxialGrid& x, const CrossSectionGrid& section) : axis(x), cross(section) {}

MomentumGrid::MomentumGrid(int count, double pmax) : n(count), p_max(pmax) {
  require(count >= kStencilWidth, "momentum grid needs at least 3 nodes");
  require(pmax > 0.0, "p_max must be positive");
  h = 2.0 * p_max / (n - 1);
  nodes.resize(n);
  for (int j = 0; j < n / 2; ++j) {
    nodes(j) = -p_max + j * h;
    nodes(n - 1 - j) = -nodes(j);
  }
  if (n % 2 == 1) nodes(n / 2) = 0.0;
  weights = trapezoid_weights(n, h);
}

std::tuple<UnitCellGrid, DeviceGrid, MomentumGrid> build_grids(const GridConfig& c) {
  const CrossSectionGrid cross(c.n_z1, c.n_z2, c.width_z1, c.width_z2);
  return {UnitCellGrid(c.n_y, cross), DeviceGrid(AxialGrid(c.n_x, c.length), cross), MomentumGrid(c.n_p, c.p_max)};
}

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::L1: return "L1";
    case NormKind::L2: return "L2";
    case NormKind::H1: return "H1";
    case NormKind::LinfXL2z: return "LinfXL2z";
  }
  return "?";
}

double discrete_norm(const Vector& f, const AxialGrid& grid, NormKind which) {
  require(f.size() == grid.n, "field size does not match axial grid");
  switch (which) {
    case NormKind::L1: return grid.weights.dot(f.cwiseAbs());
    case NormKind::L2: return std::sqrt(grid.weights.dot(f.cwiseAbs2()));
    case NormKind::H1: {
      const Vector d = (f.tail(grid.n - 1) - f.head(grid.n - 1)) / grid.h;
      return std::sqrt(grid.weights.dot(f.cwiseAbs2()) + grid.h * d.squaredNorm());
    }
    case NormKind::LinfXL2z: return f.cwiseAbs().maxCoeff();
  }
  return 0.0;
}

double gradient_norm_squared(const Matrix& V, const DeviceGrid& g) {
  require(V.rows() == g.n_z() && V.cols() == g.n_x(), "field shape does not match device grid");
  const auto& cs = g.cross;
  const Vector w1 = trapezoid_weights(cs.n1, cs.h1);
  const Vector w2 = trapezoid_weights(cs.n2, cs.h2);
  double e = 0.0;
  // axial edges
  for (int i = 0; i + 1 < g.n_x(); ++i) {
    const Vector d = (V.col(i + 1) - V.col(i)) / g.axis.h;
    e += g.axis.h * cs.weights.dot(d.cwiseAbs2());
  }
  // transverse edges
  for (int i = 0; i < g.n_x(); ++i) {
    const double wx = g.axis.weights(i);
    for (int i2 = 0; i2 < cs.n2; ++i2)
      for (int i1 = 0; i1 + 1 < cs.n1; ++i1) {
        const double d = (V(cs.index(i1 + 1, i2), i) - V(cs.index(i1, i2), i)) / cs.h1;
        e += wx * cs.h1 * w2(i2) * d * d;
      }
    for (int i2 = 0; i2 + 1 < cs.n2; ++i2)
      for (int i1 = 0; i1 < cs.n1; ++i1) {
        const double d = (V(cs.index(i1, i2 + 1), i) - V(cs.index(i1, i2), i)) / cs.h2;
        e += wx * w1(i1) * cs.h2 * d * d;
      }
  }
  return e;
}

double discrete_norm(const Matrix& V, const DeviceGrid& g, NormKind which) {
  require(V.rows() == g.n_z() && V.cols() == g.n_x(), "field shape does not match device grid");
  const Matrix w = g.weights();
  switch (which) {
    case NormKind::L1: return w.cwiseProduct(V.cwiseAbs()).sum();
    case NormKind::L2: return std::sqrt(w.cwiseProduct(V.cwiseAbs2()).sum());
    case NormKind::H1: return std::sqrt(w.cwiseProduct(V.cwiseAbs2()).sum() + gradient_norm_squared(V, g));
    case NormKind::LinfXL2z: {
      double m = 0.0;
      for (int i = 0; i < g.n_x(); ++i) m = std::max(m, std::sqrt(g.cross.weights.dot(V.col(i).cwiseAbs2())));
      return m;
    }
  }
  return 0.0;
}

double h2_norm(const Matrix& V, const DeviceGrid& g) {
  const double h1sq = std::pow(discrete_norm(V, g, NormKind::H1), 2);
  const auto& cs = g.cross;
  const int nx = g.n_x();
  const double hx = g.axis.h;
  const Vector w1 = trapezoid_weights(cs.n1, cs.h1);
  const Vector w2 = trapezoid_weights(cs.n2, cs.h2);
  // second difference along a z direction with ghost reflection at the ends
  auto dzz = [&](int i, int i1, int i2, int dir) {
    const int n = dir == 1 ? cs.n1 : cs.n2;
    const int c = dir == 1 ? i1 : i2;
    const double h = dir == 1 ? cs.h1 : cs.h2;
    auto at = [&](int k) { return dir == 1 ? V(cs.index(k, i2), i) : V(cs.index(i1, k), i); };
    const double left = c == 0 ? at(1) : at(c - 1);
    const double right = c == n - 1 ? at(n - 2) : at(c + 1);
    return (left - 2.0 * at(c) + right) / (h * h);
  };
  double s = 0.0;
  for (int i = 1; i + 1 < nx; ++i) {
    const Vector dxx = (V.col(i - 1) - 2.0 * V.col(i) + V.col(i + 1)) / (hx * hx);
    s += g.axis.weights(i) * cs.weights.dot(dxx.cwiseAbs2());
  }
  for (int i = 0; i < nx; ++i)
    for (int i2 = 0; i2 < cs.n2; ++i2)
      for (int i1 = 0; i1 < cs.n1; ++i1) {
        const double w = g.axis.weights(i) * cs.weights(cs.index(i1, i2));
        const double a = dzz(i, i1, i2, 1);
        const double b = dzz(i, i1, i2, 2);
        s += w * (a * a + b * b);
      }
  // mixed derivatives on cells, counted twice as in |D^2 V|^2
  for (int i = 0; i + 1 < nx; ++i)
    for (int i2 = 0; i2 < cs.n2; ++i2)
      for (int i1 = 0; i1 < cs.n1; ++i1) {
        if (i1 + 1 < cs.n1) {
          const double d = (V(cs.index(i1 + 1, i2), i + 1) - V(cs.index(i1, i2), i + 1) - V(cs.index(i1 + 1, i2), i) +
                            V(cs.index(i1, i2), i)) /
                           (hx * cs.h1);
          s += 2.0 * hx * cs.h1 * w2(i2) * d * d;
        }
        if (i2 + 1 < cs.n2) {
          const double d = (V(cs.index(i1, i2 + 1), i + 1) - V(cs.index(i1, i2), i + 1) - V(cs.index(i1, i2 + 1), i) +
                            V(cs.index(i1, i2), i)) /
                           (hx * cs.h2);
          s += 2.0 * hx * cs.h2 * w1(i1) * d * d;
        }
      }
  for (int i = 0; i < nx; ++i)
    for (int i2 = 0; i2 + 1 < cs.n2; ++i2)
      for (int i1 = 0; i1 + 1 < cs.n1; ++i1) {
        const double d = (V(cs.index(i1 + 1, i2 + 1), i) - V(cs.index(i1, i2 + 1), i) - V(cs.index(i1 + 1, i2), i) +
                          V(cs.index(i1, i2), i)) /
                         (cs.h1 * cs.h2);
        s += 2.0 * g.axis.weights(i) * cs.h1 * cs.h2 * d * d;
      }
  return std::sqrt(h1sq + s);
}

Matrix forward_difference(int n, double h) {
  Matrix d = Matrix::Zero(n - 1, n);
  for (int i = 0; i + 1 < n; ++i) {
    d(i, i) = -1.0 / h;
    d(i, i + 1) = 1.0 / h;
  }
  return d;
}

}  // namespace nanowire
