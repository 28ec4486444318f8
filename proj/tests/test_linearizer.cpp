#include <cmath>
#include <random>

#include "doctest.h"
#include "ghlin/errors.hpp"
#include "ghlin/linearizer.hpp"
#include "ghlin/sampling.hpp"

using namespace ghlin;

namespace {

GHOperator diag(std::initializer_list<double> d, std::optional<double> t = std::nullopt) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return GHOperator::make_matrix(v.asDiagonal(), NormKind::sup(), t);
}

StateVector one_d(double x) { return StateVector::dense(Eigen::VectorXd::Constant(1, x)); }

// Partial sums of the two series defining C.
double holder_partial_sum(const GHOperator& op, double theta, double eps, int terms) {
  const auto& n = op.norms();
  const double s = n.Tinv * n.Tinv / (1.0 - n.Tinv * eps);
  double m = 0.0, u = 0.0;
  for (int k = 0; k < terms; ++k) m += std::pow(n.T_on_M, k) * std::pow(n.Tinv + eps * s, (k + 1) * theta);
  for (int k = 1; k <= terms; ++k) u += std::pow(n.Tinv_on_N, k) * std::pow(n.T + eps, (k - 1) * theta);
  return 2.0 * eps * (op.M_trivial() ? 0.0 : m) + 2.0 * eps * (op.N_trivial() ? 0.0 : u);
}

LinearizationProblem quadratic_problem(double p) {
  const GHOperator T = GHOperator::make_matrix(Eigen::MatrixXd::Constant(1, 1, 0.5));
  LinearizationProblem problem{
      [p](const StateVector& x) {
        const double y = x.coords()[0] - p;
        return one_d(p + 0.5 * y + y * y);
      },
      one_d(p),
      T,
      0.5,
      0.5,
      std::nullopt,
      [](double radius) { return 2.0 * radius; },
      true};
  return problem;
}

}  // namespace

TEST_CASE("theta_bound") {
  CHECK(theta_bound(diag({0.5, 3.0})) == doctest::Approx(1.0));
  CHECK(theta_bound(diag({0.5, 0.25, 3.0})) == doctest::Approx(0.5));
  CHECK(theta_bound(diag({2.0, 3.0})) == doctest::Approx(std::log(2.0) / std::log(3.0)));
  CHECK(theta_bound(diag({0.5, 0.25})) == doctest::Approx(0.5));

  Eigen::MatrixXd J(2, 2);
  J << 0.5, 1.0, 0.0, 0.5;
  CHECK_THROWS_AS(theta_bound(GHOperator::make_matrix(J)), PreconditionError);

  // The ratio condition holds strictly below the bound.
  const GHOperator op = diag({0.5, 0.25, 3.0});
  const double th = theta_bound(op);
  CHECK(holder_ratio(op, 0.5 * th) < 1.0);
  CHECK(holder_ratio(op, th) == doctest::Approx(1.0));
}

TEST_CASE("theta_bound is invariant under rescaling the ambient norm") {
  // Sampled operator norms under lambda ||.|| give the same ratios.
  const GHOperator op = diag({0.5, 0.25, 3.0});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = scale(rng);
    double t_norm = 0.0, tinv_norm = 0.0, tm = 0.0, tn = 0.0;
    for (int i = 0; i < 2000; ++i) {
      Eigen::VectorXd x(3);
      if (i < 3)
        x = Eigen::VectorXd::Unit(3, i);
      else
        x << u(rng), u(rng), u(rng);
      const StateVector v = StateVector::dense(x);
      const auto nrm = [&](const StateVector& w) { return lambda * op.norm(w); };
      t_norm = std::max(t_norm, nrm(op.apply(v)) / nrm(v));
      tinv_norm = std::max(tinv_norm, nrm(op.apply_inverse(v)) / nrm(v));
      const StateVector m = op.project_M(v);
      const StateVector n = op.project_N(v);
      if (!m.is_zero()) tm = std::max(tm, nrm(op.apply(m)) / nrm(m));
      if (!n.is_zero()) tn = std::max(tn, nrm(op.apply_inverse(n)) / nrm(n));
    }
    const double sampled = std::min(-std::log(tn) / std::log(t_norm), -std::log(tm) / std::log(tinv_norm));
    CHECK(sampled == doctest::Approx(theta_bound(op)).epsilon(1e-9));
  }
}

TEST_CASE("holder_constant") {
  const GHOperator op = diag({0.5, 3.0});
  CHECK(holder_constant(op, 0.5, 0.0) == 0.0);
  const double C = holder_constant(op, 0.5, 0.01);
  CHECK(std::isfinite(C));
  CHECK(C == doctest::Approx(holder_partial_sum(op, 0.5, 0.01, 200)).epsilon(1e-12));

  const GHOperator op3 = diag({0.5, 0.25, 3.0});
  CHECK(holder_constant(op3, 0.25, 0.05) == doctest::Approx(holder_partial_sum(op3, 0.25, 0.05, 400)).epsilon(1e-12));

  // Ratio ||T|_M|| (||T^-1|| + eps s)^theta reaches 1 at theta = 1 for any eps > 0.
  const std::string msg = [&] {
    try {
      holder_constant(op, 1.0, 1e-9);
    } catch (const PreconditionError& e) {
      return std::string(e.what());
    }
    return std::string();
  }();
  CHECK(msg.find("eps too large for this theta") != std::string::npos);
  CHECK_THROWS_AS(holder_constant(op, 0.5, 0.5), PreconditionError);
  CHECK_THROWS_AS(holder_constant(op, 0.0, 0.01), PreconditionError);
}

TEST_CASE("empirical_holder") {
  const SeriesPolicy policy{1e-12, 10000};
  SUBCASE("zero perturbation has zero ratios") {
    const GHOperator op = diag({0.5, 3.0});
    const ConjugacyMap hp = solve_h_prime(op, zero_perturbation(), policy);
    std::vector<std::pair<StateVector, StateVector>> pairs;
    Eigen::VectorXd a(2), b(2);
    a << 0.1, 0.2;
    b << 0.3, -0.1;
    pairs.emplace_back(StateVector::dense(a), StateVector::dense(b));
    const HolderReport r = empirical_holder(hp, {0.5, 0.0, 0.99}, pairs);
    CHECK(r.max_ratio == 0.0);
    CHECK(r.within_bound);
    CHECK(r.pairs_used == 1);
  }
  SUBCASE("constant perturbation gives a constant h'") {
    const GHOperator op = GHOperator::make_matrix(Eigen::MatrixXd::Constant(1, 1, 0.5));
    const ConjugacyMap hp = solve_h_prime(op, constant_perturbation(one_d(0.1), NormKind::sup()), policy);
    std::vector<std::pair<StateVector, StateVector>> pairs;
    for (double x = -1.0; x < 1.0; x += 0.1) pairs.emplace_back(one_d(x), one_d(x + 0.3));
    const HolderReport r = empirical_holder(hp, {0.5, 1.0, 0.99}, pairs);
    CHECK(r.max_ratio == 0.0);
  }
  SUBCASE("shift instance") {
    WeightSpec w;
    w.left_tail = 0.5;
    w.right_tail = 2.0;
    const GHOperator op = GHOperator::make_shift(w, NormKind::sup(), 0.5);
    const double eps = 0.05;
    const ConjugacyMap hp = solve_h_prime(op, sine_perturbation(eps, 1.0, {-2, 2}, NormKind::sup()), policy);
    const double theta = theta_bound(op) / 2.0;
    const HolderCertificate cert{theta, holder_constant(op, theta, eps), 0.99};
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> dist(0.0, cert.domain_diameter);
    const SampleDomain domain = SampleDomain::sparse_window({-6, 6});
    std::vector<std::pair<StateVector, StateVector>> pairs;
    for (int i = 0; i < 1000; ++i) {
      StateVector x = random_in_ball(domain, 1.0, NormKind::sup(), rng);
      StateVector y = random_at_distance(x, domain, dist(rng), NormKind::sup(), rng);
      pairs.emplace_back(std::move(x), std::move(y));
    }
    const HolderReport r = empirical_holder(hp, cert, pairs);
    CHECK(r.pairs_used > 900);
    CHECK(r.within_bound);
    CHECK(r.max_ratio <= cert.C + r.max_inflation);
    CHECK(r.max_ratio > 0.0);
  }
  SUBCASE("forward maps are rejected") {
    const GHOperator op = diag({0.5, 3.0});
    const ConjugacyMap h = solve_h(op, zero_perturbation(), 0.5, policy, 1e-8);
    CHECK_THROWS_AS(empirical_holder(h, {0.5, 1.0, 0.99}, {}), PreconditionError);
  }
}

TEST_CASE("linearize a linear map") {
  const GHOperator T = diag({0.5, 3.0});
  Eigen::VectorXd p(2);
  p << 1.0, -2.0;
  const StateVector ps = StateVector::dense(p);
  LinearizationProblem problem{[T, ps](const StateVector& x) { return ps + T.apply(x - ps); },
                               ps,
                               T,
                               0.5,
                               1.0,
                               std::nullopt,
                               [](double) { return 0.0; },
                               true};
  const LinearizationResult r = linearize(problem, {1e-12, 10000}, 1e-10);
  CHECK(r.U_radius == 1.0);
  CHECK(r.cert.C == 0.0);
  Eigen::VectorXd x(2);
  x << 1.3, -1.5;
  const MapEvaluation H = r.H(StateVector::dense(x));
  CHECK((H.value.coords() - (x - p)).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("linearize x/2 + x^2 at the origin") {
  const LinearizationProblem problem = quadratic_problem(0.0);
  const LinearizationResult r = linearize(problem, {1e-13, 10000}, 1e-12);
  CHECK(r.U_radius > 0.0);
  CHECK(3.0 * problem.alpha_lip_on_ball(2.0 * r.U_radius) <= r.eps);
  CHECK(r.eps <= admissible_eps(problem.DFp, problem.gamma));
  CHECK(holder_ratio(problem.DFp, r.cert.theta) < 1.0);
  CHECK(r.cert.domain_diameter < 1.0);
  CHECK(r.beta.sup_bound() <= r.eps);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-r.U_radius, r.U_radius);
  for (int i = 0; i < 200; ++i) {
    const StateVector x = one_d(u(rng));
    const LinearizationResidual res = linearization_residual(r, problem, x);
    CHECK(res.residual <= res.certified_bound);
    CHECK(res.certified_bound < 1e-10);
  }
}

TEST_CASE("linearization commutes with translation") {
  const LinearizationProblem at_zero = quadratic_problem(0.0);
  const LinearizationProblem at_two = quadratic_problem(2.0);
  const SeriesPolicy policy{1e-13, 10000};
  const LinearizationResult r0 = linearize(at_zero, policy, 1e-12);
  const LinearizationResult r2 = linearize(at_two, policy, 1e-12);
  CHECK(r0.U_radius == r2.U_radius);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-r0.U_radius, r0.U_radius);
  for (int i = 0; i < 100; ++i) {
    const double y = u(rng);
    const double h0 = r0.H(one_d(y)).value.coords()[0];
    const double h2 = r2.H(one_d(2.0 + y)).value.coords()[0];
    CHECK(std::abs(h0 - h2) <= 1e-10);
  }
}

TEST_CASE("linearize preconditions") {
  LinearizationProblem problem = quadratic_problem(0.0);
  problem.p = one_d(0.3);
  CHECK_THROWS_AS(linearize(problem, {}, 1e-8), PreconditionError);

  LinearizationProblem steep = quadratic_problem(0.0);
  steep.min_cutoff_r = 0.1;
  CHECK_THROWS_AS(linearize(steep, {}, 1e-8), PreconditionError);

  LinearizationProblem bad_gamma = quadratic_problem(0.0);
  bad_gamma.gamma = 1.0;
  CHECK_THROWS_AS(linearize(bad_gamma, {}, 1e-8), PreconditionError);
}
