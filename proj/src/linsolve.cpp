#include "mgfsi/linsolve.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace mgfsi {

SparseMatrix::SparseMatrix(int n, std::vector<std::vector<int>> pattern_rows)
    : n_(n) {
  MGFSI_CHECK(static_cast<int>(pattern_rows.size()) == n, "pattern size mismatch");
  row_ptr_.resize(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    auto& r = pattern_rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    row_ptr_[i + 1] = row_ptr_[i] + static_cast<int>(r.size());
  }
  cols_.reserve(row_ptr_[n]);
  for (int i = 0; i < n; ++i)
    cols_.insert(cols_.end(), pattern_rows[i].begin(), pattern_rows[i].end());
  vals_.assign(cols_.size(), 0.0);
}

int SparseMatrix::find(int i, int j) const {
  const auto begin = cols_.begin() + row_ptr_[i];
  const auto end = cols_.begin() + row_ptr_[i + 1];
  auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return static_cast<int>(it - cols_.begin());
}

void SparseMatrix::add(int i, int j, double v) {
  const int k = find(i, j);
  MGFSI_CHECK(k >= 0, "entry (" << i << "," << j << ") not in pattern");
  vals_[k] += v;
}

void SparseMatrix::set(int i, int j, double v) {
  const int k = find(i, j);
  MGFSI_CHECK(k >= 0, "entry (" << i << "," << j << ") not in pattern");
  vals_[k] = v;
}

double SparseMatrix::get(int i, int j) const {
  const int k = find(i, j);
  return k < 0 ? 0.0 : vals_[k];
}

bool SparseMatrix::has_entry(int i, int j) const { return find(i, j) >= 0; }

void SparseMatrix::zero_row(int i) {
  for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) vals_[k] = 0.0;
}

void SparseMatrix::set_zero() { std::fill(vals_.begin(), vals_.end(), 0.0); }

Vector SparseMatrix::multiply(const Vector& x) const {
  Vector y = Vector::Zero(n_);
  for (int i = 0; i < n_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      y[i] += vals_[k] * x[cols_[k]];
  return y;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<std::vector<int>> rows(n_);
  for (int i = 0; i < n_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      rows[cols_[k]].push_back(i);
  SparseMatrix t(n_, std::move(rows));
  for (int i = 0; i < n_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      t.set(cols_[k], i, vals_[k]);
  return t;
}

void PatternBuilder::add_clique(const std::vector<int>& dofs) {
  for (int i : dofs)
    for (int j : dofs) rows_[i].push_back(j);
}

std::vector<std::vector<int>> PatternBuilder::take() { return std::move(rows_); }

Vector solve_sparse(const SparseMatrix& A, const Vector& b) {
  MGFSI_CHECK(A.n() == b.size(), "dimension mismatch in solve");
  using EigenSparse = Eigen::SparseMatrix<double>;
  EigenSparse M(A.n(), A.n());
  {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nnz());
    const auto& rp = A.row_ptr();
    const auto& cs = A.cols();
    const auto& vs = A.values();
    for (int i = 0; i < A.n(); ++i)
      for (int k = rp[i]; k < rp[i + 1]; ++k)
        if (vs[k] != 0.0) trip.emplace_back(i, cs[k], vs[k]);
    M.setFromTriplets(trip.begin(), trip.end());
  }
  M.makeCompressed();
  Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  MGFSI_CHECK(lu.info() == Eigen::Success,
              "singular factorization: " << lu.lastErrorMessage());
  Vector x = lu.solve(b);
  // One step of iterative refinement tightens the residual bound.
  Vector r = b - M * x;
  x += lu.solve(r);
  const double bn = b.norm();
  const double rn = (b - M * x).norm();
  MGFSI_CHECK(!(rn > 1e-8 * (bn > 0 ? bn : 1.0)),
              "direct solve residual too large: " << rn << " vs ||b||=" << bn);
  return x;
}

std::vector<int> expand_dofs_with_masters(const std::vector<int>& dofs,
                                          const ConstraintSet& c) {
  std::vector<int> out = dofs;
  for (int d : dofs) {
    if (const auto* l = c.line(d))
      for (const auto& [m, w] : l->masters) out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void condense(SparseMatrix& A, Vector& b, const ConstraintSet& c) {
  const auto& rp = A.row_ptr();
  const auto& cs = A.cols();
  auto& vs = A.values();

  // Distribute slave rows to master rows.
  for (const auto& [slave, line] : c.lines()) {
    for (int k = rp[slave]; k < rp[slave + 1]; ++k) {
      if (vs[k] == 0.0) continue;
      for (const auto& [m, w] : line.masters) {
        MGFSI_CHECK(A.has_entry(m, cs[k]),
                    "condense pass A: (" << m << "," << cs[k] << ") missing for slave "
                                          << slave);
        A.add(m, cs[k], w * vs[k]);
      }
    }
    for (const auto& [m, w] : line.masters) b[m] += w * b[slave];
    A.zero_row(slave);
    b[slave] = 0.0;
  }

  // Eliminate slave columns (all rows).
  for (int i = 0; i < A.n(); ++i) {
    for (int k = rp[i]; k < rp[i + 1]; ++k) {
      if (vs[k] == 0.0) continue;
      const auto* line = c.line(cs[k]);
      if (!line) continue;
      const double v = vs[k];
      vs[k] = 0.0;
      for (const auto& [m, w] : line->masters) {
        MGFSI_CHECK(A.has_entry(i, m),
                    "condense pass B: (" << i << "," << m << ") missing for slave "
                                          << cs[k]);
        A.add(i, m, w * v);
      }
      b[i] -= v * line->inhom;
    }
  }

  // Constraint equations.
  for (const auto& [slave, line] : c.lines()) {
    A.set(slave, slave, 1.0);
    for (const auto& [m, w] : line.masters) A.set(slave, m, -w);
    b[slave] = line.inhom;
  }
}

void condense_rhs(Vector& b, const ConstraintSet& c) {
  for (const auto& [slave, line] : c.lines()) {
    for (const auto& [m, w] : line.masters) b[m] += w * b[slave];
    b[slave] = 0.0;
  }
}

NewtonLog newton_solve(
    const std::function<Vector(const Vector&)>& residual,
    const std::function<SparseMatrix(const Vector&)>& jacobian, Vector& x,
    const NewtonSettings& settings) {
  MGFSI_CHECK(settings.max_iter >= 1, "newton: max_iter must be >= 1");
  MGFSI_CHECK(settings.abs_tol > 0 && settings.rel_tol > 0,
              "newton: tolerances must be positive");
  NewtonLog log;
  Vector r = residual(x);
  double norm = r.norm();
  const double norm0 = norm;
  log.residual_norms.push_back(norm);
  for (int it = 0; it < settings.max_iter; ++it) {
    if (norm <= settings.abs_tol || norm <= settings.rel_tol * norm0) {
      log.converged = true;
      return log;
    }
    SparseMatrix J = jacobian(x);
    Vector dx = solve_sparse(J, r);
    double step = 1.0;
    Vector x_trial;
    Vector r_trial;
    double norm_trial = 0.0;
    bool accepted = false;
    for (int ls = 0; ls <= settings.max_line_search; ++ls) {
      x_trial = x + step * dx;
      try {
        r_trial = residual(x_trial);
        norm_trial = r_trial.norm();
        if (norm_trial < norm) {
          accepted = true;
          break;
        }
      } catch (const std::exception&) {
        // e.g. mesh tangling at the trial point; shorten the step
      }
      step *= settings.backtrack;
    }
    MGFSI_CHECK(accepted, "newton: line search failed at iteration "
                              << it << " (residual " << norm << ")");
    x = x_trial;
    r = r_trial;
    norm = norm_trial;
    log.residual_norms.push_back(norm);
    log.iterations = it + 1;
  }
  if (norm <= settings.abs_tol || norm <= settings.rel_tol * norm0)
    log.converged = true;
  MGFSI_CHECK(log.converged, "newton: no convergence after "
                                 << settings.max_iter
                                 << " iterations (residual " << norm << ")");
  return log;
}

}  // namespace mgfsi
