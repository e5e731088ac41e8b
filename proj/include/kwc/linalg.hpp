#pragma once

// Sparse assembly helpers and the preconditioned CG used for every SPD
// system in the elliptic solvers.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <vector>

#include "grid.hpp"

namespace kwc::linalg {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Appends the entries of −Δ_N scaled by `scale`.
inline void add_neg_laplacian(const Grid& g, double scale, Triplets& t) {
  auto couple = [&](std::size_t p, std::size_t q, double k) {
    t.emplace_back(p, p, k);
    t.emplace_back(q, q, k);
    t.emplace_back(p, q, -k);
    t.emplace_back(q, p, -k);
  };
  const double kx = scale / (g.spacing(0) * g.spacing(0));
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i + 1 < g.nx(); ++i) couple(g.index(i, j), g.index(i + 1, j), kx);
  if (g.dim() == 2) {
    const double ky = scale / (g.spacing(1) * g.spacing(1));
    for (int j = 0; j + 1 < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) couple(g.index(i, j), g.index(i, j + 1), ky);
  }
}

inline void add_diagonal(const ScalarField& d, Triplets& t) {
  for (std::size_t k = 0; k < d.size(); ++k) t.emplace_back(k, k, d[k]);
}

inline SparseMatrix assemble(std::size_t n, const Triplets& t) {
  SparseMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

inline constexpr double kCgTolerance = 1e-12;

/// Jacobi-preconditioned conjugate gradients for SPD `A`.
inline CgResult solve_spd(const SparseMatrix& A, const std::vector<double>& rhs,
                          const std::vector<double>* guess = nullptr, double tol = kCgTolerance) {
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * A.rows()));
  cg.compute(A);
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  CgResult out;
  Eigen::VectorXd x;
  if (guess)
    x = cg.solveWithGuess(b, Eigen::Map<const Eigen::VectorXd>(guess->data(), static_cast<Eigen::Index>(guess->size())));
  else
    x = cg.solve(b);
  out.iterations = static_cast<int>(cg.iterations());
  const double bn = b.norm();
  out.relative_residual = bn > 0.0 ? (b - A * x).norm() / bn : (A * x).norm();
  // Eigen stops at tol on its own residual estimate; accept small drift.
  out.converged = cg.info() == Eigen::Success || out.relative_residual <= 100.0 * tol;
  out.x.assign(x.data(), x.data() + x.size());
  return out;
}

}  // namespace kwc::linalg
