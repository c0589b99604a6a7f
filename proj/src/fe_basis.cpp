#include "mgfsi/fe_basis.hpp"

#include <cmath>

namespace mgfsi {

Quadrature1D Quadrature1D::gauss(int n) {
  MGFSI_CHECK(n >= 1, "gauss rule needs n >= 1");
  Quadrature1D q;
  q.points.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < n / 2 + n % 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0, p1;
    for (int it = 0; it < 100; ++it) {
      // Legendre recurrence up to degree n and Newton step on P_n.
      p0 = 1.0;
      p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    p0 = 1.0;
    p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.points[i] = -x;
    q.weights[i] = w;
    q.points[n - 1 - i] = x;
    q.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) q.points[n / 2] = 0.0;
  return q;
}

QuadratureCell QuadratureCell::gauss(int n) {
  const Quadrature1D q1 = Quadrature1D::gauss(n);
  QuadratureCell q;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      q.points.emplace_back(q1.points[i], q1.points[j]);
      q.weights.push_back(q1.weights[i] * q1.weights[j]);
    }
  return q;
}

QuadratureCell quadrature_for_degree(int degree) {
  MGFSI_CHECK(degree >= 1, "quadrature degree must be >= 1");
  return QuadratureCell::gauss(degree / 2 + 1);
}

double lagrange_value(int k, int i, double t) {
  double v = 1.0;
  const double ti = -1.0 + 2.0 * i / k;
  for (int j = 0; j <= k; ++j) {
    if (j == i) continue;
    const double tj = -1.0 + 2.0 * j / k;
    v *= (t - tj) / (ti - tj);
  }
  return v;
}

double lagrange_grad(int k, int i, double t) {
  const double ti = -1.0 + 2.0 * i / k;
  double sum = 0.0;
  for (int m = 0; m <= k; ++m) {
    if (m == i) continue;
    const double tm = -1.0 + 2.0 * m / k;
    double prod = 1.0 / (ti - tm);
    for (int j = 0; j <= k; ++j) {
      if (j == i || j == m) continue;
      const double tj = -1.0 + 2.0 * j / k;
      prod *= (t - tj) / (ti - tj);
    }
    sum += prod;
  }
  return sum;
}

ShapeTable::ShapeTable(int deg, const std::vector<Vec2>& pts) : degree(deg) {
  TensorShapes sh{deg};
  values.resize(pts.size());
  grads.resize(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    values[p].resize(sh.n_nodes());
    grads[p].resize(sh.n_nodes());
    for (int n = 0; n < sh.n_nodes(); ++n) {
      values[p][n] = sh.value(n, pts[p]);
      grads[p][n] = sh.grad(n, pts[p]);
    }
  }
}

Vec2 CellGeometry::map(const Vec2& xi) const {
  const double x = xi.x(), y = xi.y();
  const double n0 = 0.25 * (1 - x) * (1 - y);
  const double n1 = 0.25 * (1 + x) * (1 - y);
  const double n2 = 0.25 * (1 + x) * (1 + y);
  const double n3 = 0.25 * (1 - x) * (1 + y);
  return n0 * corners[0] + n1 * corners[1] + n2 * corners[2] + n3 * corners[3];
}

Mat2 CellGeometry::jacobian(const Vec2& xi) const {
  const double x = xi.x(), y = xi.y();
  const Vec2 dx = 0.25 * (-(1 - y) * corners[0] + (1 - y) * corners[1] +
                          (1 + y) * corners[2] - (1 + y) * corners[3]);
  const Vec2 dy = 0.25 * (-(1 - x) * corners[0] - (1 + x) * corners[1] +
                          (1 + x) * corners[2] + (1 - x) * corners[3]);
  Mat2 J;
  J.col(0) = dx;
  J.col(1) = dy;
  return J;
}

bool CellGeometry::invert(const Vec2& x, Vec2& xi) const {
  xi.setZero();
  for (int it = 0; it < 50; ++it) {
    const Vec2 r = map(xi) - x;
    if (r.norm() < 1e-12) return true;
    const Mat2 J = jacobian(xi);
    Vec2 dxi = J.fullPivLu().solve(r);
    double damp = 1.0;
    // Keep the iterate in a modest neighborhood of the reference cell.
    while ((xi - damp * dxi).cwiseAbs().maxCoeff() > 2.0 && damp > 1e-4)
      damp *= 0.5;
    xi -= damp * dxi;
  }
  return (map(xi) - x).norm() < 1e-12;
}

Vec2 face_ref_point(int f, double t) {
  static const std::array<Vec2, 4> ref_corners = {
      Vec2{-1, -1}, Vec2{1, -1}, Vec2{1, 1}, Vec2{-1, 1}};
  const Vec2& a = ref_corners[f];
  const Vec2& b = ref_corners[(f + 1) % 4];
  return a + t * (b - a);
}

}  // namespace mgfsi
