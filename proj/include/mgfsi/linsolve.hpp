#pragma once

#include "mgfsi/fespace.hpp"

#include <functional>

namespace mgfsi {

/// Compressed sparse row matrix with a fixed pattern. Column indices are
/// sorted and unique per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int n, std::vector<std::vector<int>> pattern_rows);

  int n() const { return n_; }
  int nnz() const { return static_cast<int>(cols_.size()); }

  void add(int i, int j, double v);
  void set(int i, int j, double v);
  double get(int i, int j) const;
  bool has_entry(int i, int j) const;
  void zero_row(int i);
  void set_zero();

  Vector multiply(const Vector& x) const;
  SparseMatrix transposed() const;

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& cols() const { return cols_; }
  const std::vector<double>& values() const { return vals_; }
  std::vector<double>& values() { return vals_; }

 private:
  int find(int i, int j) const;
  int n_ = 0;
  std::vector<int> row_ptr_, cols_;
  std::vector<double> vals_;
};

/// Pattern accumulation helper (cliques of coupled DoFs).
class PatternBuilder {
 public:
  explicit PatternBuilder(int n) : rows_(n) {}
  void add_clique(const std::vector<int>& dofs);
  void add(int i, int j) { rows_[i].push_back(j); }
  std::vector<std::vector<int>> take();

 private:
  std::vector<std::vector<int>> rows_;
};

/// Direct sparse LU solve (partial pivoting). Postcondition
/// ||Ax-b|| <= 1e-10 ||b||; throws on a singular factorization.
Vector solve_sparse(const SparseMatrix& A, const Vector& b);

/// In-place condensation of affine constraints: slave rows are distributed
/// to master rows, slave columns eliminated (inhomogeneities moved to the
/// right-hand side), and each slave row replaced by its constraint
/// equation. The pattern must contain the master couplings (assemble
/// cliques through expand_dofs_with_masters).
void condense(SparseMatrix& A, Vector& b, const ConstraintSet& c);

/// Right-hand-side-only condensation: distribute slave entries to masters
/// and zero the slaves (used for residual norms).
void condense_rhs(Vector& b, const ConstraintSet& c);

/// Clique expansion: dofs plus all masters of constrained dofs.
std::vector<int> expand_dofs_with_masters(const std::vector<int>& dofs,
                                          const ConstraintSet& c);

struct NewtonSettings {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_iter = 25;
  int max_line_search = 10;
  double backtrack = 0.5;
};

struct NewtonLog {
  std::vector<double> residual_norms;  // [0] = initial
  bool converged = false;
  int iterations = 0;
};

/// Newton iteration with backtracking line search on the residual norm.
/// residual(x) returns b with solve target J dx = b (i.e. the negative
/// operator value); jacobian(x) returns the operator derivative.
NewtonLog newton_solve(
    const std::function<Vector(const Vector&)>& residual,
    const std::function<SparseMatrix(const Vector&)>& jacobian, Vector& x,
    const NewtonSettings& settings);

}  // namespace mgfsi
