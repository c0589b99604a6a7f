#pragma once

#include "mgfsi/common.hpp"

#include <array>

namespace mgfsi {

/// Gauss-Legendre rule with n points on [-1,1], exact through degree 2n-1.
struct Quadrature1D {
  std::vector<double> points;
  std::vector<double> weights;
  static Quadrature1D gauss(int n);
};

/// Tensor Gauss rule on the reference square [-1,1]^2. Weights sum to 4.
struct QuadratureCell {
  std::vector<Vec2> points;
  std::vector<double> weights;
  static QuadratureCell gauss(int n_per_dim);
  int size() const { return static_cast<int>(points.size()); }
};

/// Smallest tensor Gauss rule exact for total polynomial degree `degree`
/// per variable.
QuadratureCell quadrature_for_degree(int degree);

/// 1D Lagrange basis of degree k on [-1,1] with equidistant nodes
/// t_i = -1 + 2 i / k (node 0 at -1, node k at +1).
double lagrange_value(int k, int i, double t);
double lagrange_grad(int k, int i, double t);

/// Tensor-product Lagrange element Q_k on the reference square.
/// Local node n = iy*(k+1)+ix at (t_ix, t_iy).
struct TensorShapes {
  int degree;
  int n_nodes() const { return (degree + 1) * (degree + 1); }
  Vec2 node_xi(int n) const {
    const int k1 = degree + 1;
    const int ix = n % k1, iy = n / k1;
    return {-1.0 + 2.0 * ix / degree, -1.0 + 2.0 * iy / degree};
  }
  double value(int n, const Vec2& xi) const {
    const int k1 = degree + 1;
    return lagrange_value(degree, n % k1, xi.x()) *
           lagrange_value(degree, n / k1, xi.y());
  }
  Vec2 grad(int n, const Vec2& xi) const {
    const int k1 = degree + 1;
    const int ix = n % k1, iy = n / k1;
    return {lagrange_grad(degree, ix, xi.x()) * lagrange_value(degree, iy, xi.y()),
            lagrange_value(degree, ix, xi.x()) * lagrange_grad(degree, iy, xi.y())};
  }
};

/// Shape values and reference gradients tabulated at a fixed point set.
struct ShapeTable {
  int degree = 0;
  std::vector<std::vector<double>> values;  // [pt][node]
  std::vector<std::vector<Vec2>> grads;     // [pt][node]
  ShapeTable() = default;
  ShapeTable(int degree, const std::vector<Vec2>& pts);
  int n_nodes() const { return (degree + 1) * (degree + 1); }
};

/// Bilinear mapping from the reference square to a straight-sided quad.
struct CellGeometry {
  std::array<Vec2, 4> corners;

  Vec2 map(const Vec2& xi) const;
  Mat2 jacobian(const Vec2& xi) const;
  /// Damped Newton inversion of the bilinear map (tolerance 1e-12,
  /// at most 50 iterations). Returns false if it does not converge.
  bool invert(const Vec2& x, Vec2& xi) const;
};

/// Reference coordinates of local face f at face parameter t in [0,1]
/// (t=0 at corner f, t=1 at corner (f+1)%4).
Vec2 face_ref_point(int f, double t);

}  // namespace mgfsi
