#include "dmpk/transfer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "dmpk/ensemble.hpp"
#include "dmpk/errors.hpp"
#include "dmpk/sde.hpp"

namespace dmpk {

namespace {

constexpr double kUnitaryTol = 1e-10;
constexpr int kNewtonSchulzMaxIter = 60;

void flip_lower_rows(ComplexMatrix& a) {
  const Eigen::Index n = a.rows() / 2;
  a.bottomRows(n) *= -1.0;
}

/// X = Sz M* Sz M.
ComplexMatrix metric_defect_operator(const ComplexMatrix& m) {
  ComplexMatrix sm = m;
  flip_lower_rows(sm);
  ComplexMatrix x = m.adjoint() * sm;
  flip_lower_rows(x);
  return x;
}

double unitary_defect(const ComplexMatrix& u) {
  return (u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())).norm();
}

}  // namespace

TransferMatrix TransferMatrix::identity(const SymmetryClass& cls) {
  const Eigen::Index n2 = 2 * cls.channels();
  return {ComplexMatrix::Identity(n2, n2), 0.0, cls};
}

ComplexMatrix sigma_z(Eigen::Index n) {
  ComplexMatrix s = ComplexMatrix::Identity(2 * n, 2 * n);
  s.bottomRightCorner(n, n) *= -1.0;
  return s;
}

ComplexMatrix sigma_x(Eigen::Index n) {
  ComplexMatrix s = ComplexMatrix::Zero(2 * n, 2 * n);
  s.topRightCorner(n, n).setIdentity();
  s.bottomLeftCorner(n, n).setIdentity();
  return s;
}

ConstraintDefect constraint_defect(const TransferMatrix& tm) {
  const ComplexMatrix& m = tm.m;
  const Eigen::Index n = m.rows() / 2;
  ComplexMatrix sm = m;
  flip_lower_rows(sm);
  ComplexMatrix g = m.adjoint() * sm;
  g.topLeftCorner(n, n).diagonal().array() -= 1.0;
  g.bottomRightCorner(n, n).diagonal().array() += 1.0;

  ConstraintDefect out;
  out.current = g.norm();
  if (tm.cls.beta() == 1) {
    const ComplexMatrix swapped = sigma_x(n) * m * sigma_x(n);
    out.time_reversal = (swapped - m.conjugate()).norm();
  }
  return out;
}

void enforce_time_reversal(ComplexMatrix& m) {
  const Eigen::Index n = m.rows() / 2;
  m.bottomLeftCorner(n, n) = m.topRightCorner(n, n).conjugate();
  m.bottomRightCorner(n, n) = m.topLeftCorner(n, n).conjugate();
}

TransferMatrix reproject(const TransferMatrix& tm) {
  const Eigen::Index dim = tm.m.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(dim, dim);
  const ComplexMatrix x = metric_defect_operator(tm.m);
  const double distance = (x - id).norm();
  if (!(distance < 1.0)) {
    throw ReprojectionFailure("matrix too far from the group to reproject (||X - 1||_F = " +
                              std::to_string(distance) + ")");
  }
  if (distance == 0.0) return tm;

  // Coupled Newton-Schulz: Y -> X^{1/2}, Z -> X^{-1/2}.
  ComplexMatrix y = x;
  ComplexMatrix z = id;
  bool converged = false;
  for (int it = 0; it < kNewtonSchulzMaxIter; ++it) {
    const ComplexMatrix p = 0.5 * (3.0 * id - z * y);
    y = y * p;
    z = p * z;
    if ((p - id).norm() < 1e-15 * dim) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ReprojectionFailure("inverse square root iteration did not converge");

  TransferMatrix out{tm.m * z, tm.s, tm.cls};
  if (tm.cls.beta() == 1) enforce_time_reversal(out.m);
  return out;
}

TransmissionState transmission_spectrum(const TransferMatrix& tm) {
  const Eigen::Index n = tm.m.rows() / 2;
  const ComplexMatrix a = tm.m.topLeftCorner(n, n);
  const ComplexMatrix h = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DomainError("eigenvalue solver failed on M++* M++");
  const Eigen::VectorXd& lambda = es.eigenvalues();  // ascending
  const double lmax = lambda(n - 1);
  if (!(lambda(0) > 1e-14 * std::max(1.0, lmax))) throw DomainError("M++ is singular");
  if (lambda(0) < 1.0 - kLambdaViolation) {
    throw ConstraintViolation("eigenvalue of M++* M++ below one: " + std::to_string(lambda(0)));
  }
  TransmissionState out{tm.s, std::vector<double>(static_cast<std::size_t>(n))};
  for (Eigen::Index k = 0; k < n; ++k) {
    double l = lambda(k);
    if (l < 1.0 && l >= 1.0 - kLambdaClamp) l = 1.0;
    // lambda ascending -> T descending; store T ascending.
    out.T[static_cast<std::size_t>(n - 1 - k)] = 1.0 / std::max(l, 1.0);
  }
  return out;
}

TransferMatrix assemble_from_decomposition(const SingularDecomposition& d, const SymmetryClass& cls) {
  const Eigen::Index n = cls.channels();
  for (const ComplexMatrix* u : {&d.U_plus, &d.U_minus, &d.V_plus, &d.V_minus}) {
    if (u->rows() != n || u->cols() != n) throw DomainError("decomposition block has wrong shape");
    if (unitary_defect(*u) > kUnitaryTol) throw DomainError("decomposition block is not unitary");
  }
  if (d.Lambda.size() != n) throw DomainError("Lambda has wrong length");
  if ((d.Lambda.array() < 1.0).any()) throw DomainError("Lambda entries must be >= 1");
  if (cls.beta() == 1 && ((d.U_plus - d.U_minus.conjugate()).norm() > kUnitaryTol ||
                          (d.V_plus - d.V_minus.conjugate()).norm() > kUnitaryTol)) {
    throw DomainError("beta=1 decomposition needs U+ = conj(U-) and V+ = conj(V-)");
  }
  const Eigen::VectorXd sh = (d.Lambda.array().square() - 1.0).sqrt().matrix();
  const auto L = d.Lambda.cast<std::complex<double>>().asDiagonal();
  const auto S = sh.cast<std::complex<double>>().asDiagonal();

  TransferMatrix out = TransferMatrix::identity(cls);
  out.m.topLeftCorner(n, n) = d.U_plus * L * d.V_plus;
  out.m.topRightCorner(n, n) = d.U_plus * S * d.V_minus;
  out.m.bottomLeftCorner(n, n) = d.U_minus * S * d.V_plus;
  out.m.bottomRightCorner(n, n) = d.U_minus * L * d.V_minus;
  return out;
}

MatrixPath evolve_transfer(double s_end, const SymmetryClass& cls, const SolverConfig& config,
                           std::uint64_t path_index) {
  config.validate(cls);
  const std::vector<double> grid = record_times(config.record_grid, s_end);
  const std::size_t n = cls.size();
  NoiseStream stream(config.seed, path_index);
  const BrownianPath brownian(stream, n);
  std::vector<double> dB(n);

  MatrixPath path;
  TransferMatrix current = TransferMatrix::identity(cls);
  path.records.push_back(current);
  if (cls.beta() == 1) path.max_time_reversal_defect = 0.0;

  std::uint64_t coarse_index = 0;
  std::uint64_t since_reprojection = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double span = grid[i] - grid[i - 1];
    std::uint64_t count = static_cast<std::uint64_t>(std::ceil(span / config.dt_base - 1e-9));
    if (count == 0) count = 1;
    const double h = span / static_cast<double>(count);
    for (std::uint64_t c = 0; c < count; ++c, ++coarse_index) {
      brownian.increment(coarse_index, h, 0, 0, dB);
      const std::vector<double> diag = b_diagonal_from_brownian(dB, cls);
      const NoiseIncrement inc = assemble_L_increment(cls, h, stream, diag);
      // Reprojecting the step factor keeps its O(ds) defect from being
      // amplified by the condition number of the accumulated product.
      TransferMatrix factor{ComplexMatrix::Identity(2 * cls.channels(), 2 * cls.channels()) + inc.matrix(), 0.0,
                            cls};
      factor = reproject(factor);
      current.m = factor.m * current.m;
      if (cls.beta() == 1) enforce_time_reversal(current.m);
      ++path.steps;
      if (++since_reprojection == static_cast<std::uint64_t>(config.reproject_every)) {
        current = reproject(current);
        since_reprojection = 0;
      }
    }
    current.s = grid[i];
    const ConstraintDefect defect = constraint_defect(current);
    if (defect.current > kDefectCeiling) {
      throw IntegrationFailure("transfer matrix left the group: defect " + std::to_string(defect.current) +
                               " at s=" + std::to_string(current.s) + " (path " + std::to_string(path_index) +
                               ")");
    }
    path.max_defect = std::max(path.max_defect, defect.current);
    if (defect.time_reversal) {
      path.max_time_reversal_defect = std::max(*path.max_time_reversal_defect, *defect.time_reversal);
    }
    path.records.push_back(current);
  }
  return path;
}

double small_s_nondegeneracy(const SymmetryClass& cls, double s_small, std::size_t paths, double gap_tol,
                             const SolverConfig& config) {
  if (paths == 0) return 0.0;
  SolverConfig local = config;
  local.record_grid.clear();
  std::atomic<std::size_t> passed{0};
  for_each_path(paths, [&](std::size_t p) {
    const MatrixPath path = evolve_transfer(s_small, cls, local, p);
    if (in_open_domain(transmission_spectrum(path.records.back()), gap_tol)) ++passed;
  });
  return static_cast<double>(passed.load()) / static_cast<double>(paths);
}

}  // namespace dmpk
