#include <gtest/gtest.h>

#include <Eigen/QR>
#include <cmath>

#include "dmpk/errors.hpp"
#include "dmpk/transfer.hpp"

using namespace dmpk;

namespace {

ComplexMatrix random_unitary(Eigen::Index n, NoiseStream& stream) {
  ComplexMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = {stream.next_normal(), stream.next_normal()};
  }
  return Eigen::HouseholderQR<ComplexMatrix>(g).householderQ();
}

SingularDecomposition random_decomposition(const SymmetryClass& cls, const Eigen::VectorXd& lambda,
                                           NoiseStream& stream) {
  const Eigen::Index n = cls.channels();
  SingularDecomposition d;
  d.U_plus = random_unitary(n, stream);
  d.V_plus = random_unitary(n, stream);
  if (cls.beta() == 1) {
    d.U_minus = d.U_plus.conjugate();
    d.V_minus = d.V_plus.conjugate();
  } else {
    d.U_minus = random_unitary(n, stream);
    d.V_minus = random_unitary(n, stream);
  }
  d.Lambda = lambda;
  return d;
}

}  // namespace

TEST(Transfer, IdentityHasUnitTransmission) {
  const auto id = TransferMatrix::identity(SymmetryClass(2, 3));
  const auto t = transmission_spectrum(id);
  for (double x : t.T) EXPECT_NEAR(x, 1.0, 1e-15);
  EXPECT_EQ(constraint_defect(id).current, 0.0);
  EXPECT_FALSE(constraint_defect(id).time_reversal.has_value());
  EXPECT_EQ(*constraint_defect(TransferMatrix::identity(SymmetryClass(1, 3))).time_reversal, 0.0);
}

TEST(Transfer, DecompositionGivesInverseSquares) {
  for (int beta : {1, 2}) {
    const SymmetryClass cls(beta, 4);
    NoiseStream stream(5, beta);
    Eigen::VectorXd lambda(4);
    lambda << 1.1, 1.7, 3.0, 9.5;
    const auto m = assemble_from_decomposition(random_decomposition(cls, lambda, stream), cls);
    const auto defect = constraint_defect(m);
    EXPECT_LT(defect.current, 1e-12);
    if (beta == 1) {
      EXPECT_LT(*defect.time_reversal, 1e-12);
    }
    const auto t = transmission_spectrum(m);
    ASSERT_EQ(t.T.size(), 4u);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(t.T[k], 1.0 / (lambda(3 - k) * lambda(3 - k)), 1e-12);
    EXPECT_TRUE(std::is_sorted(t.T.begin(), t.T.end()));
  }
}

TEST(Transfer, DecompositionValidation) {
  const SymmetryClass cls(1, 2);
  NoiseStream stream(1, 0);
  Eigen::VectorXd lambda(2);
  lambda << 1.5, 0.5;
  EXPECT_THROW(assemble_from_decomposition(random_decomposition(cls, lambda, stream), cls), DomainError);
  lambda << 1.5, 2.5;
  auto d = random_decomposition(cls, lambda, stream);
  d.U_minus = random_unitary(2, stream);
  EXPECT_THROW(assemble_from_decomposition(d, cls), DomainError);
}

TEST(Transfer, ReprojectRemovesDefect) {
  const SymmetryClass cls(2, 3);
  NoiseStream stream(2, 0);
  Eigen::VectorXd lambda(3);
  lambda << 1.2, 2.0, 4.0;
  auto m = assemble_from_decomposition(random_decomposition(cls, lambda, stream), cls);
  ComplexMatrix noise(6, 6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) noise(i, j) = {1e-4 * stream.next_normal(), 1e-4 * stream.next_normal()};
  }
  m.m += noise;
  EXPECT_GT(constraint_defect(m).current, 1e-6);
  const auto fixed = reproject(m);
  EXPECT_LT(constraint_defect(fixed).current, 1e-12);
  EXPECT_LT((fixed.m - m.m).norm(), 1e-2);
}

TEST(Transfer, ReprojectRejectsFarMatrices) {
  auto m = TransferMatrix::identity(SymmetryClass(2, 2));
  m.m *= 3.0;
  EXPECT_THROW(reproject(m), ReprojectionFailure);
}

TEST(Transfer, EnforceTimeReversal) {
  const SymmetryClass cls(1, 2);
  NoiseStream stream(8, 0);
  ComplexMatrix m(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) m(i, j) = {stream.next_normal(), stream.next_normal()};
  }
  enforce_time_reversal(m);
  EXPECT_LT((sigma_x(2) * m * sigma_x(2) - m.conjugate()).norm(), 1e-15);
}

TEST(Transfer, EvolveStaysOnGroup) {
  for (int beta : {1, 2}) {
    const SymmetryClass cls(beta, 3);
    SolverConfig config;
    config.record_grid = {0.1, 0.2};
    const auto path = evolve_transfer(0.3, cls, config, 4);
    ASSERT_EQ(path.records.size(), 4u);
    EXPECT_EQ(path.records.front().s, 0.0);
    EXPECT_LT(path.max_defect, 1e-10);
    if (beta == 1) {
      EXPECT_LT(*path.max_time_reversal_defect, 1e-12);
    }
    for (std::size_t i = 1; i < path.records.size(); ++i) {
      EXPECT_TRUE(in_open_domain(transmission_spectrum(path.records[i]), 0.0));
    }
    const auto again = evolve_transfer(0.3, cls, config, 4);
    EXPECT_EQ(again.records.back().m, path.records.back().m);
  }
}

TEST(Transfer, SmallLengthNondegenerate) {
  SolverConfig config;
  config.dt_base = 1e-4;
  EXPECT_GE(small_s_nondegeneracy(SymmetryClass(2, 3), 0.01, 20, 1e-8, config), 0.95);
}
