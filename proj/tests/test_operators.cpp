// Symbols, Toeplitz matrices, the group action and averaging.

#include "bergman/group.hpp"

#include <gtest/gtest.h>

using namespace bergman;

namespace {

Point pt(std::initializer_list<cplx> v) {
  Point z(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (cplx x : v) z(i++, 0) = x;
  return z;
}

const Domain disk = Domain::unit_ball(1);

struct DiskSetup {
  DomainRule rule;
  BasisHandle basis;
  DiskSetup(double lambda, int cutoff)
      : rule(radial_rule(disk, lambda, cutoff + 4)), basis(make_basis(disk, lambda, cutoff)) {}
};

// Monomial norms on the disk, h_k = k! Gamma(l) / Gamma(k + l).
double disk_norm(int k, double lambda) {
  return std::exp(std::lgamma(k + 1.0) + std::lgamma(lambda) - std::lgamma(k + lambda));
}

// Compression of multiplication by z to degree <= cutoff, orthonormal basis.
CMatrix disk_shift(int cutoff, double lambda) {
  CMatrix m = CMatrix::Zero(cutoff + 1, cutoff + 1);
  for (int j = 0; j < cutoff; ++j) m(j + 1, j) = std::sqrt(disk_norm(j + 1, lambda) / disk_norm(j, lambda));
  return m;
}

// exp of a random element of su(n,m).
GroupElement random_element(CounterStream& s, int n, int m, double scale = 0.4) {
  const int k = n + m;
  CMatrix x(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) x(i, j) = scale * cplx(s.normal(), s.normal());
  CMatrix a = x.topLeftCorner(n, n);
  CMatrix d = x.bottomRightCorner(m, m);
  CMatrix y = CMatrix::Zero(k, k);
  y.topLeftCorner(n, n) = 0.5 * (a - CMatrix(a.adjoint()));
  y.bottomRightCorner(m, m) = 0.5 * (d - CMatrix(d.adjoint()));
  y.topRightCorner(n, m) = x.topRightCorner(n, m);
  y.bottomLeftCorner(m, n) = x.topRightCorner(n, m).adjoint();
  y -= (y.trace() / static_cast<double>(k)) * CMatrix::Identity(k, k);
  return GroupElement::from_path(n, m, y, 1.0);
}

Point random_in(const Domain& d, CounterStream& s, double r) { return random_point(d, s, r); }

}  // namespace

// ---------------------------------------------------------------------------
// Symbols

TEST(Symbol, EvaluationExamples) {
  EXPECT_NEAR(symbol_eval(Symbol::radial(Profile::power(2)), disk, pt({0.5})).real(), 0.25, 1e-15);
  EXPECT_EQ(symbol_eval(Symbol::hyperbolic(Profile::identity()), disk, pt({0.0})).real(), 0.0);
  EXPECT_DOUBLE_EQ(parabolic_coordinate(0.0), 1.0);
  EXPECT_THROW(symbol_eval(Symbol::parabolic(Profile::identity(), BoundingMap::none), disk, pt({0.0})), Error);
  EXPECT_THROW(symbol_eval(Symbol::radial(Profile::identity()), disk, pt({1.0})), Error);
  EXPECT_THROW(symbol_eval(Symbol::hyperbolic(Profile::identity()), Domain::unit_ball(2), pt({0.0, 0.0})), Error);
}

TEST(Symbol, ComposedProfile) {
  const Profile p = Profile::compose(Profile::arctangent(1.0), Profile::sine(1.0));
  for (double x : {-1.2, 0.0, 0.4, 1.5}) EXPECT_NEAR(p(x), std::atan(std::sin(x)), 1e-15);
  EXPECT_LE(p.bound(-pi / 2, pi / 2), std::atan(1.0) + 1e-15);
}

TEST(Symbol, EveryFamilyIsBoundedByItsDeclaredBound) {
  CounterStream s(1, 1);
  const Domain ball = Domain::unit_ball(2);
  const Domain mb = Domain::matrix_ball(2, 2);
  TorusTerm t1;
  t1.abs2 = {1, 0, 0, 1};
  TorusTerm t2;
  t2.re_power = 1;
  t2.coeff = -2.0;
  const std::vector<std::pair<Symbol, Domain>> cases = {
      {Symbol::radial(Profile::sine(3.0)), ball},
      {Symbol::hyperbolic(Profile::identity()), disk},
      {Symbol::parabolic(Profile::power(3)), disk},
      {Symbol::real_form(Profile::sine(4.0)), ball},
      {Symbol::k_invariant(KStatistic::trace2, Profile::exponential(-1.0)), mb},
      {Symbol::torus_invariant({t1, t2}), mb},
  };
  for (const auto& [phi, d] : cases) {
    const double bound = phi.esssup_bound(d);
    for (int i = 0; i < 2000; ++i) {
      const Point z = random_in(d, s, 0.999999 * std::pow(s.uniform(), 0.2));
      EXPECT_LE(std::abs(phi(z)), bound + 1e-12) << phi.describe();
    }
  }
}

TEST(Symbol, DeclaredInvarianceHolds) {
  const Domain ball = Domain::unit_ball(2);
  const Domain mb = Domain::matrix_ball(2, 2);
  TorusTerm t;
  t.re_power = 1;
  t.abs2 = {0, 1, 0, 0};
  const std::vector<std::pair<Symbol, Domain>> cases = {
      {Symbol::radial(Profile::sine(3.0)), disk},
      {Symbol::radial(Profile::gaussian(0.3, 0.2)), ball},
      {Symbol::hyperbolic(Profile::sine(2.0)), disk},
      {Symbol::parabolic(Profile::sine(5.0)), disk},
      {Symbol::real_form(Profile::identity()), ball},
      {Symbol::real_form(Profile::identity()), Domain::unit_ball(3)},
      {Symbol::k_invariant(KStatistic::trace1, Profile::arctangent(1.0)), mb},
      {Symbol::k_invariant(KStatistic::trace2, Profile::arctangent(1.0)), mb},
      {Symbol::torus_invariant({t}), mb},
  };
  for (const auto& [phi, d] : cases) {
    const auto r = invariance_spot_check(phi, d, 30, 20, 77);
    EXPECT_TRUE(r.pass) << phi.describe() << " defect " << r.max_defect;
    EXPECT_EQ(r.evaluations, 600u);
  }
}

TEST(Symbol, NonInvariantSymbolFailsTheSpotCheck) {
  // Re z is not rotation invariant; declare it so and the check must notice.
  const Symbol lie = Symbol::oracle([](const Point& z) { return cplx(z(0, 0).real(), 0.0); }, Invariance::rotation, 1.0,
                                    true, "re_declared_rotation");
  EXPECT_FALSE(invariance_spot_check(lie, disk, 10, 10, 5).pass);
}

// ---------------------------------------------------------------------------
// Toeplitz matrices

TEST(Toeplitz, ConstantSymbolGivesIdentity) {
  DiskSetup s(2.5, 10);
  const auto t = toeplitz_matrix(s.basis, Symbol::radial(Profile::polynomial({1.0})), s.rule);
  EXPECT_LT(max_abs(t.entries - CMatrix::Identity(11, 11)), 1e-14);

  const Domain mb = Domain::matrix_ball(2, 2);
  const auto rule = mc_sample(mb, 5.0, 20000, 4);
  const auto b = make_basis(mb, 5.0, 2, &rule);
  const Symbol c1 = Symbol::k_invariant(KStatistic::trace1, Profile::polynomial({1.0}));
  EXPECT_LT(max_abs(toeplitz_matrix(b, c1, rule).entries - CMatrix::Identity(15, 15)), 1e-12);
  // Full assembly also integrates entries across torus weights, which the
  // basis treats as exact zeros; those agree only within noise.
  const auto full = toeplitz_matrix(b, c1, rule, {Assembly::full});
  for (Eigen::Index i = 0; i < 15; ++i)
    for (Eigen::Index j = 0; j < 15; ++j)
      EXPECT_LE(std::abs(full.entries(i, j) - (i == j ? 1.0 : 0.0)), 1e-12 + 5.0 * full.std_error(i, j));
}

TEST(Toeplitz, DiskEigenvalueLaw) {
  for (double lambda : {2.0, 3.5}) {
    DiskSetup s(lambda, 12);
    const auto t = toeplitz_matrix(s.basis, Symbol::radial(Profile::power(2)), s.rule, {Assembly::full});
    for (int k = 0; k <= 12; ++k) {
      const double oracle = disk_norm(k + 1, lambda) / disk_norm(k, lambda);
      EXPECT_NEAR(t.entries(k, k).real(), oracle, 1e-13);
      EXPECT_NEAR(oracle, (k + 1.0) / (k + lambda), 1e-13);
    }
    CMatrix off = t.entries;
    off.diagonal().setZero();
    EXPECT_LT(max_abs(off), 1e-14);
  }
}

TEST(Toeplitz, RealPartIsTridiagonal) {
  DiskSetup s(2.0, 10);
  const auto t = toeplitz_matrix(s.basis, Symbol::coordinate(0, 0), s.rule);
  const CMatrix shift = disk_shift(10, 2.0);
  const CMatrix oracle = 0.5 * (shift + CMatrix(shift.adjoint()));
  EXPECT_LT(max_abs(t.entries - oracle), 1e-14);
  EXPECT_LT(t.entries.diagonal().cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(t.entries(1, 0).real(), 0.5 * std::sqrt(0.5), 1e-15);
}

TEST(Toeplitz, RingPathAgreesWithFullIntegration) {
  const DomainRule rule = radial_rule(disk, 2.5, 14, {12, 40});
  const auto b = make_basis(disk, 2.5, 10);
  for (const Symbol& phi : {Symbol::hyperbolic(Profile::sine(1.0)), Symbol::parabolic(Profile::power(2)),
                            Symbol::coordinate(0, 0, true)}) {
    auto no_rings = rule;
    no_rings.rings.reset();
    const auto a = toeplitz_matrix(b, phi, rule);
    const auto c = toeplitz_matrix(b, phi, no_rings, {Assembly::full});
    EXPECT_LT(max_abs(a.entries - c.entries), 1e-13) << phi.describe();
  }
}

TEST(Toeplitz, RealSymbolsGiveContractiveHermitianMatrices) {
  const Domain ball = Domain::unit_ball(2);
  const auto rule = radial_rule(ball, 3.2, 10);
  const auto b = make_basis(ball, 3.2, 6);
  for (const Symbol& phi : {Symbol::radial(Profile::sine(4.0)), Symbol::real_form(Profile::identity()),
                            Symbol::coordinate(1, 0)}) {
    const auto t = toeplitz_matrix(b, phi, rule, {Assembly::full});
    EXPECT_LT(hermitian_defect(t), 1e-10);
    EXPECT_LE(spectral_norm(t.entries), phi.esssup_bound(ball) + 1e-12);
  }
}

TEST(Toeplitz, CommutatorExamples) {
  DiskSetup s(2.0, 8);
  const auto a = toeplitz_matrix(s.basis, Symbol::radial(Profile::power(2)), s.rule);
  const auto g = toeplitz_matrix(s.basis, Symbol::radial(Profile::gaussian(0.0, 1.0 / std::sqrt(2.0))), s.rule);
  EXPECT_EQ(commutator_norm(a, a).spectral, 0.0);
  EXPECT_LT(commutator_norm(a, g).spectral, 1e-10);

  const auto re = toeplitz_matrix(s.basis, Symbol::coordinate(0, 0), s.rule);
  const auto im = toeplitz_matrix(s.basis, Symbol::coordinate(0, 0, true), s.rule);
  const auto c = commutator_norm(re, im);
  // Oracle: T_Re = (S + S*)/2, T_Im = (S - S*)/(2i) with the closed-form shift S.
  const CMatrix sh = disk_shift(8, 2.0);
  const CMatrix ore = 0.5 * (sh + CMatrix(sh.adjoint()));
  const CMatrix oim = (sh - CMatrix(sh.adjoint())) / cplx(0.0, 2.0);
  EXPECT_NEAR(c.spectral, spectral_norm(ore * oim - oim * ore), 1e-12);
  EXPECT_GT(c.spectral, 0.01);
  EXPECT_NEAR(c.frobenius, (ore * oim - oim * ore).norm(), 1e-12);
  EXPECT_FALSE(c.stochastic);

  DiskSetup other(2.5, 8);
  const auto x = toeplitz_matrix(other.basis, Symbol::radial(Profile::power(2)), other.rule);
  try {
    commutator_norm(a, x);
    FAIL() << "expected basis mismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::basis_mismatch);
  }
}

TEST(Toeplitz, CompressionTakesTheLeadingBlock) {
  DiskSetup s(2.0, 10);
  const auto re = toeplitz_matrix(s.basis, Symbol::coordinate(0, 0), s.rule);
  const auto im = toeplitz_matrix(s.basis, Symbol::coordinate(0, 0, true), s.rule);
  const auto c6 = compress(re, 6);
  EXPECT_EQ(c6.size(), 7);
  EXPECT_EQ(max_abs(c6.entries - re.entries.topLeftCorner(7, 7)), 0.0);
  const auto n = commutator_norm(re, im, 6);
  const CMatrix full = re.entries * im.entries - im.entries * re.entries;
  EXPECT_NEAR(n.spectral, spectral_norm(full.topLeftCorner(7, 7)), 1e-15);
  EXPECT_EQ(n.dim, 7);
}

TEST(Toeplitz, RejectsMismatchedInputs) {
  DiskSetup s(2.0, 4);
  const auto ball_rule = radial_rule(Domain::unit_ball(2), 3.0, 4);
  EXPECT_THROW(toeplitz_matrix(s.basis, Symbol::radial(Profile::identity()), ball_rule), Error);
  EXPECT_THROW(toeplitz_matrix(s.basis, Symbol::parabolic(Profile::identity(), BoundingMap::none), s.rule), Error);
  const auto other = radial_rule(disk, 2.5, 8);
  EXPECT_THROW(toeplitz_matrix(s.basis, Symbol::radial(Profile::identity()), other), Error);
}

class MatrixBallToeplitz : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    rule_ = new DomainRule(mc_sample(Domain::matrix_ball(2, 2), 5.0, 200000, 21));
    basis_ = new BasisHandle(make_basis(Domain::matrix_ball(2, 2), 5.0, 2, rule_));
  }
  static void TearDownTestSuite() {
    delete basis_;
    delete rule_;
  }
  static DomainRule* rule_;
  static BasisHandle* basis_;
};
DomainRule* MatrixBallToeplitz::rule_ = nullptr;
BasisHandle* MatrixBallToeplitz::basis_ = nullptr;

TEST_F(MatrixBallToeplitz, TorusSymbolsFollowTheGramBlocks) {
  TorusTerm a;
  a.abs2 = {1, 0, 0, 0};
  TorusTerm b;
  b.re_power = 1;
  const auto ta = toeplitz_matrix(*basis_, Symbol::torus_invariant({a}), *rule_);
  const auto tb = toeplitz_matrix(*basis_, Symbol::torus_invariant({b}), *rule_);
  for (Eigen::Index i = 0; i < basis_->size(); ++i)
    for (Eigen::Index j = 0; j < basis_->size(); ++j)
      if (basis_->gram(i, j) == 0.0) {
        EXPECT_EQ(ta.entries(i, j), 0.0);
        EXPECT_EQ(tb.entries(i, j), 0.0);
      }
  // The collision block is where the cross invariant acts.
  Eigen::Index p = -1, q = -1;
  for (Eigen::Index i = 0; i < basis_->size(); ++i)
    for (Eigen::Index j = i + 1; j < basis_->size(); ++j)
      if (basis_->gram(i, j) != 0.0) p = i, q = j;
  ASSERT_GE(p, 0);
  EXPECT_GT(std::abs(tb.entries(p, q)), 10.0 * tb.std_error(p, q));
  const auto c = commutator_norm(ta, tb);
  EXPECT_TRUE(c.stochastic);
  EXPECT_EQ(classify(c), Significance::nonzero);
}

TEST_F(MatrixBallToeplitz, RealSymbolsAreHermitianWithinNoise) {
  const auto t = toeplitz_matrix(*basis_, Symbol::k_invariant(KStatistic::trace2, Profile::sine(2.0)), *rule_,
                                 {Assembly::full});
  for (Eigen::Index i = 0; i < t.size(); ++i)
    for (Eigen::Index j = 0; j < t.size(); ++j)
      EXPECT_LE(std::abs(t.entries(i, j) - std::conj(t.entries(j, i))), 1e-12 + 3.0 * t.std_error(i, j));
  EXPECT_EQ(t.replicates.size(), rule_->batch_count());
}

TEST_F(MatrixBallToeplitz, KInvariantSymbolsCommuteWithinNoise) {
  const auto a = toeplitz_matrix(*basis_, Symbol::k_invariant(KStatistic::trace1, Profile::arctangent(1.0)), *rule_);
  const auto b = toeplitz_matrix(*basis_, Symbol::k_invariant(KStatistic::trace2, Profile::arctangent(1.0)), *rule_);
  EXPECT_EQ(classify(commutator_norm(a, b)), Significance::zero);
}

TEST(Toeplitz, SignificanceBands) {
  CommutatorNorms c;
  c.std_error = 1.0;
  c.spectral = 2.9;
  EXPECT_EQ(classify(c), Significance::zero);
  c.spectral = 5.0;
  EXPECT_EQ(classify(c), Significance::inconclusive);
  c.spectral = 10.5;
  EXPECT_EQ(classify(c), Significance::nonzero);
}

// ---------------------------------------------------------------------------
// Group elements and the Mobius action

TEST(Group, MembershipIsEnforced) {
  EXPECT_LT(GroupElement::identity(2, 3).membership_defect(), 1e-15);
  CMatrix g = CMatrix::Identity(2, 2);
  g(0, 1) = 0.5;
  try {
    GroupElement::from_matrix(1, 1, g);
    FAIL() << "expected not_in_group";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_in_group);
  }
  CounterStream s(2, 2);
  for (const Subgroup& h : {Subgroup::torus(2, 2), Subgroup::maximal_compact(2, 2), Subgroup::rotation(),
                            Subgroup::hyperbolic(), Subgroup::parabolic(), Subgroup::real_form(2),
                            Subgroup::real_form(3)})
    for (const auto& e : h.sample(10, 3)) {
      EXPECT_LT(e.membership_defect(), membership_tolerance) << h.describe();
      EXPECT_NEAR(std::abs(e.matrix().determinant() - 1.0), 0.0, 1e-10);
    }
}

TEST(Group, MobiusExamples) {
  const Point z = pt({cplx(0.3, -0.2)});
  EXPECT_EQ(mobius_apply(GroupElement::identity(1, 1), disk, z), z);
  const auto g = Subgroup::hyperbolic().element({0.5});
  EXPECT_NEAR(g.matrix()(0, 0).real(), std::cosh(0.5), 1e-15);
  EXPECT_NEAR(g.matrix()(0, 1).real(), std::sinh(0.5), 1e-15);
  EXPECT_NEAR(std::abs(mobius_apply(g, disk, pt({0.0}))(0, 0) - std::tanh(0.5)), 0.0, 1e-15);
  EXPECT_THROW(mobius_apply(g, disk, pt({1.5})), Error);
}

TEST(Group, ActionAxioms) {
  CounterStream s(9, 9);
  for (const auto& [n, m] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 2}, std::pair{1, 3}}) {
    const Domain d = Domain::matrix_ball(n, m);
    for (int i = 0; i < 10; ++i) {
      const auto g1 = random_element(s, n, m);
      const auto g2 = random_element(s, n, m);
      const Point z = random_in(d, s, 0.8);
      const Point lhs = mobius_apply(g1, d, mobius_apply(g2, d, z));
      const Point rhs = mobius_apply(g1 * g2, d, z);
      EXPECT_LT(max_abs(lhs - rhs), 1e-10);
      EXPECT_LT(max_abs(mobius_apply(g1.inverse(), d, mobius_apply(g1, d, z)) - z), 1e-10);
      EXPECT_TRUE(contains(d, mobius_apply(g1, d, z)));
    }
  }
}

TEST(Group, PkpFactorization) {
  CMatrix blk = CMatrix::Zero(4, 4);
  CounterStream s(5, 5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if ((i < 2) == (j < 2)) blk(i, j) = cplx(s.normal(), s.normal());
  auto f = pkp_factorize(blk, 2, 2);
  EXPECT_LT(max_abs(f.p_plus), 1e-15);
  EXPECT_LT(max_abs(f.p_minus), 1e-15);
  EXPECT_LT(max_abs(f.k_upper - blk.topLeftCorner(2, 2)), 1e-15);
  EXPECT_LT(max_abs(f.k_lower - blk.bottomRightCorner(2, 2)), 1e-15);

  CMatrix up = CMatrix::Identity(4, 4);
  up.topRightCorner(2, 2) << cplx(0.1, 0.2), 0.3, cplx(0, -0.4), 0.5;
  f = pkp_factorize(up, 2, 2);
  EXPECT_LT(max_abs(f.p_plus - up.topRightCorner(2, 2)), 1e-15);
  EXPECT_LT(max_abs(f.k_upper - CMatrix::Identity(2, 2)), 1e-15);
  EXPECT_LT(max_abs(f.k_lower - CMatrix::Identity(2, 2)), 1e-15);
  EXPECT_LT(max_abs(f.p_minus), 1e-15);

  for (int i = 0; i < 10; ++i) {
    const auto g = Subgroup::maximal_compact(2, 2).sample(1, 40 + i)[0] * random_element(s, 2, 2, 0.8);
    EXPECT_LT(max_abs(pkp_factorize(g.matrix(), 2, 2).reassemble() - g.matrix()), 1e-10);
  }
  CMatrix singular = CMatrix::Identity(2, 2);
  singular(1, 1) = 0.0;
  EXPECT_THROW(pkp_factorize(singular, 1, 1), Error);
}

TEST(Group, JacobianFactor) {
  const Point z = pt({cplx(0.2, 0.5)});
  EXPECT_EQ(jacobian_factor(GroupElement::identity(1, 1), disk, z), cplx(1.0));
  const double theta = 0.7;
  const auto r = Subgroup::rotation().element({theta});
  EXPECT_NEAR(std::abs(r.matrix()(1, 1) - std::polar(1.0, -theta / 2)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(jacobian_factor(r, disk, z) - std::polar(1.0, theta)), 0.0, 1e-14);

  // Finite-difference complex Jacobian determinant of the Mobius map.
  CounterStream s(6, 6);
  for (const auto& [n, m] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 2}}) {
    const Domain d = Domain::matrix_ball(n, m);
    for (int i = 0; i < 5; ++i) {
      const auto g = random_element(s, n, m);
      const Point w = random_in(d, s, 0.6);
      const int dim = n * m;
      CMatrix jac(dim, dim);
      const double h = 1e-5;
      for (int k = 0; k < dim; ++k) {
        Point e = Point::Zero(n, m);
        e(k / m, k % m) = h;
        const Point df = (mobius_apply(g, d, w + e) - mobius_apply(g, d, w - e)) / (2 * h);
        for (int q = 0; q < dim; ++q) jac(q, k) = df(q / m, q % m);
      }
      const cplx fd = jac.determinant();
      EXPECT_LT(std::abs(fd - jacobian_factor(g, d, w)) / std::abs(fd), 1e-8);
    }
  }
}

TEST(Group, JacobianCocycle) {
  CounterStream s(8, 1);
  for (const auto& [n, m] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 2}}) {
    const Domain d = Domain::matrix_ball(n, m);
    for (int i = 0; i < 10; ++i) {
      const auto g1 = random_element(s, n, m);
      const auto g2 = random_element(s, n, m);
      const Point z = random_in(d, s, 0.7);
      const cplx lhs = jacobian_factor(g1 * g2, d, z);
      const cplx rhs = jacobian_factor(g1, d, mobius_apply(g2, d, z)) * jacobian_factor(g2, d, z);
      EXPECT_LT(std::abs(lhs - rhs) / std::abs(lhs), 1e-10);
    }
  }
  for (const auto& k : Subgroup::maximal_compact(2, 2).sample(5, 1))
    EXPECT_NEAR(std::abs(jacobian_factor(k, Domain::matrix_ball(2, 2), Point::Zero(2, 2))), 1.0, 1e-12);
}

TEST(Group, MeasureIsTorusInvariant) {
  const Domain ball = Domain::unit_ball(2);
  const auto rule = radial_rule(ball, 3.6, 6);
  auto phi = [](const Point& z) { return std::norm(z(0, 0) + 0.5) * (1.0 + z(1, 0).real() * z(1, 0).real()); };
  const double base = integrate(rule, phi).value.real();
  for (const auto& h : Subgroup::torus(2, 1).sample(5, 2)) {
    const double moved = integrate(rule, [&](const Point& z) { return phi(mobius_apply(h, ball, z)); }).value.real();
    EXPECT_NEAR(moved, base, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Representation matrices

TEST(Pi, IdentityAndRotation) {
  DiskSetup s(2.0, 16);
  const auto id = pi_lambda_matrix(s.basis, GroupElement::identity(1, 1), s.rule);
  EXPECT_LT(max_abs(id.entries - CMatrix::Identity(17, 17)), 1e-13);
  const double theta = 0.9;
  const auto p = pi_lambda_matrix(s.basis, Subgroup::rotation().element({theta}), s.rule);
  for (int k = 0; k <= 16; ++k) EXPECT_NEAR(std::abs(p.entries(k, k) - std::polar(1.0, -(k + 1) * theta)), 0.0, 1e-12);
  CMatrix off = p.entries;
  off.diagonal().setZero();
  EXPECT_LT(max_abs(off), 1e-13);
}

TEST(Pi, FractionalPowerFollowsThePath) {
  // lambda/p = 1.5 and an angle beyond pi: the continued branch gives
  // exp(-i (k + 1.5) theta), not the principal power.
  DiskSetup s(3.0, 6);
  const double theta = 5.0;
  const auto p = pi_lambda_matrix(s.basis, Subgroup::rotation().element({theta}), s.rule);
  for (int k = 0; k <= 6; ++k) EXPECT_NEAR(std::abs(p.entries(k, k) - std::polar(1.0, -(k + 1.5) * theta)), 0.0, 1e-10);
  CMatrix g = Subgroup::rotation().element({theta}).matrix();
  try {
    pi_lambda_matrix(s.basis, GroupElement::from_matrix(1, 1, g), s.rule);
    FAIL() << "expected phase tracking error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::phase_tracking);
  }
}

TEST(Pi, UnitaryOnCompactElements) {
  DiskSetup s(2.7, 16);
  for (const auto& h : Subgroup::rotation().sample(5, 3)) {
    const CMatrix u = pi_lambda_matrix(s.basis, h, s.rule).entries;
    EXPECT_LT(max_abs(u.adjoint() * u - CMatrix::Identity(17, 17)), 1e-8);
  }
  const Domain ball = Domain::unit_ball(2);
  const auto rule = radial_rule(ball, 3.5, 8);
  const auto b = make_basis(ball, 3.5, 4);
  for (const auto& h : Subgroup::maximal_compact(2, 1).sample(3, 8)) {
    const CMatrix u = pi_lambda_matrix(b, h, rule).entries;
    EXPECT_LT(max_abs(u.adjoint() * u - CMatrix::Identity(b.size(), b.size())), 1e-8);
    const CMatrix v = pi_lambda_matrix(b, h.inverse(), rule).entries;
    EXPECT_LT(max_abs(u * v - CMatrix::Identity(b.size(), b.size())), 1e-8);
  }
}

TEST(Pi, RejectsNonCompactElementsWhenExact) {
  DiskSetup s(2.0, 4);
  try {
    pi_lambda_matrix(s.basis, Subgroup::hyperbolic().element({0.3}), s.rule);
    FAIL() << "expected non_compact";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_compact);
  }
  EXPECT_NO_THROW(pi_lambda_matrix(s.basis, Subgroup::hyperbolic().element({0.3}), s.rule, {false}));
}

TEST(Intertwine, Examples) {
  DiskSetup s(2.0, 10);
  EXPECT_LT(intertwine_defect(s.basis, GroupElement::identity(1, 1), Symbol::coordinate(0, 0), s.rule), 1e-13);
  EXPECT_LT(intertwine_defect(s.basis, Subgroup::rotation().element({pi / 3}), Symbol::coordinate(0, 0), s.rule), 1e-6);
  DiskSetup t(2.5, 10);
  EXPECT_LT(intertwine_defect(t.basis, Subgroup::rotation().element({1.3}), Symbol::radial(Profile::sine(3.0)), t.rule),
            1e-8);
  // Corollary: an invariant symbol commutes with the representation.
  const auto h = Subgroup::rotation().element({2.2});
  const CMatrix p = pi_lambda_matrix(t.basis, h, t.rule).entries;
  const CMatrix a = toeplitz_matrix(t.basis, Symbol::radial(Profile::sine(3.0)), t.rule).entries;
  EXPECT_LT(max_abs(p * a - a * p), 1e-10);
}

// ---------------------------------------------------------------------------
// Averaging

TEST(Average, SymbolExamples) {
  const auto g = Subgroup::rotation().grid(8);
  const Symbol r2 = Symbol::radial(Profile::power(2));
  const Symbol re = Symbol::coordinate(0, 0);
  const Symbol sum = linear_combination(r2, 1.0, re, 1.0, disk);
  const Symbol a_r2 = average_symbol(Subgroup::rotation(), r2, g, disk);
  const Symbol a_re = average_symbol(Subgroup::rotation(), re, g, disk);
  const Symbol a_sum = average_symbol(Subgroup::rotation(), sum, g, disk);
  EXPECT_EQ(a_sum.invariance(), Invariance::rotation);
  CounterStream s(3, 4);
  for (int i = 0; i < 20; ++i) {
    const Point z = random_in(disk, s, 0.95);
    EXPECT_NEAR(std::abs(a_r2(z) - r2(z)), 0.0, 1e-14);
    EXPECT_LT(std::abs(a_re(z)), 1e-15);
    EXPECT_NEAR(std::abs(a_sum(z) - r2(z)), 0.0, 1e-14);
  }
  EXPECT_THROW(average_symbol(Subgroup::hyperbolic(), r2, g, disk), Error);
}

TEST(Average, OperatorExamplesAndLemmaIdentity) {
  DiskSetup s(2.0, 8);
  const auto g = Subgroup::rotation().grid(19);
  const Subgroup rot = Subgroup::rotation();
  const auto t_r2 = toeplitz_matrix(s.basis, Symbol::radial(Profile::power(2)), s.rule);
  EXPECT_LT(max_abs(average_operator(rot, s.basis, t_r2, g, s.rule).entries - t_r2.entries), 1e-13);

  const auto t_re = toeplitz_matrix(s.basis, Symbol::coordinate(0, 0), s.rule);
  const auto avg_re = average_operator(rot, s.basis, t_re, g, s.rule);
  EXPECT_LT(max_abs(avg_re.entries), 1e-8);

  const Symbol sum = linear_combination(Symbol::radial(Profile::power(2)), 1.0, Symbol::coordinate(0, 0), 1.0, disk);
  const auto t_sum = toeplitz_matrix(s.basis, sum, s.rule, {Assembly::full});
  const auto avg = average_operator(rot, s.basis, t_sum, g, s.rule);
  EXPECT_LT(max_abs(avg.entries - t_r2.entries), 1e-8);
  const auto via_symbol = toeplitz_matrix(s.basis, average_symbol(rot, sum, g, disk), s.rule, {Assembly::full});
  EXPECT_LT(max_abs(avg.entries - via_symbol.entries), 1e-8);
  for (const auto& h : rot.sample(4, 6)) {
    const CMatrix p = pi_lambda_matrix(s.basis, h, s.rule).entries;
    EXPECT_LT(max_abs(p * avg.entries - avg.entries * p), 1e-8);
  }
}

TEST(Average, TorusAverageOnTheBall) {
  const Domain ball = Domain::unit_ball(2);
  const auto rule = radial_rule(ball, 3.0, 10);
  const auto b = make_basis(ball, 3.0, 4);
  const Subgroup torus = Subgroup::torus(2, 1);
  const auto g = torus.grid(11);
  const Symbol phi = Symbol::oracle(
      [](const Point& z) { return cplx(std::norm(z(0, 0)) + (z(0, 0) * std::conj(z(1, 0))).real(), 0.0); },
      Invariance::none, 2.0, true, "abs2_plus_cross");
  const auto t = toeplitz_matrix(b, phi, rule, {Assembly::full});
  const auto avg = average_operator(torus, b, t, g, rule);
  const auto lemma = toeplitz_matrix(b, average_symbol(torus, phi, g, ball), rule, {Assembly::full});
  EXPECT_LT(max_abs(avg.entries - lemma.entries), 1e-10);
  const auto expected = toeplitz_matrix(b, Symbol::torus_invariant({TorusTerm{1.0, {1, 0}, 0, 0}}), rule, {Assembly::full});
  EXPECT_LT(max_abs(avg.entries - expected.entries), 1e-10);
  EXPECT_THROW(torus.grid(0), Error);
  EXPECT_THROW(Subgroup::real_form(2).grid(4), Error);
}
