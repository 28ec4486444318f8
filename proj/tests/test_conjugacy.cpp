#include <cmath>
#include <random>
#include <string>
#include <thread>

#include "doctest.h"
#include "ghlin/conjugacy.hpp"
#include "ghlin/errors.hpp"
#include "ghlin/sampling.hpp"

using namespace ghlin;

namespace {

using Sparse = std::map<std::int64_t, double>;

GHOperator tail_shift(double t = 0.5) {
  WeightSpec w;
  w.left_tail = 0.5;
  w.right_tail = 2.0;
  return GHOperator::make_shift(w, NormKind::sup(), t);
}

GHOperator scalar(double a, double t = 0.5) {
  return GHOperator::make_matrix(Eigen::MatrixXd::Constant(1, 1, a), NormKind::sup(), t);
}

GHOperator diag2(double a, double b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return GHOperator::make_matrix(m);
}

StateVector one_d(double x) { return StateVector::dense(Eigen::VectorXd::Constant(1, x)); }

StateVector dense2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return StateVector::dense(v);
}

BoundedMap constant_map(const StateVector& b, NormKind k) {
  return {[b](const StateVector&) { return b; }, norm(b, k), 0.0};
}

std::vector<StateVector> samples(const SampleDomain& domain, NormKind k, int n, std::uint64_t seed,
                                 double radius = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<StateVector> out;
  for (int i = 0; i < n; ++i) out.push_back(random_in_ball(domain, radius, k, rng));
  return out;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("series cutoff") {
  const Constants k{1.0, 0.5, 1.0, 1};
  CHECK(psi_inverse_norm_bound(k) == 3.0);
  const int K = series_cutoff(k, 1.0, 1e-8, 10000);
  CHECK(series_tail_bound(k, 1.0, K) <= 1e-8);
  CHECK(series_tail_bound(k, 1.0, K - 1) > 1e-8);
  CHECK(series_cutoff(k, 0.0, 1e-8, 10) == 0);
  CHECK_THROWS_AS(series_cutoff(k, 1.0, 1e-30, 20), CapExceededError);
  const SeriesPolicy zero_tol{0.0, 10};
  const SeriesPolicy zero_cap{1e-8, 0};
  CHECK_THROWS_AS(zero_tol.validate(), PreconditionError);
  CHECK_THROWS_AS(zero_cap.validate(), PreconditionError);
}

TEST_CASE("psi_inverse_eval closed forms") {
  const SeriesPolicy policy{1e-12, 10000};
  SUBCASE("zero map") {
    const GHOperator op = diag2(0.5, 3.0);
    const PsiEvaluation e =
        psi_inverse_eval(op, linear_orbit(op), constant_map(dense2(0, 0), NormKind::sup()), dense2(1, 2), policy);
    CHECK(e.value.is_dense());
    CHECK(e.value.coords().isZero(0.0));
  }
  SUBCASE("diag(1/2, 3) with alpha = (1, 1)") {
    const GHOperator op = diag2(0.5, 3.0);
    for (const OrbitMap& r : {linear_orbit(op), perturbed_orbit(op, sine_perturbation(0.1, 1.0, {0, 1}, NormKind::sup()))}) {
      const PsiEvaluation e = psi_inverse_eval(op, r, constant_map(dense2(1, 1), NormKind::sup()), dense2(0.3, -0.7), policy);
      CHECK(std::abs(e.value.coords()[0] - 2.0) <= policy.tol);
      CHECK(std::abs(e.value.coords()[1] + 0.5) <= policy.tol);
      CHECK(std::abs(e.value.coords()[0] - 2.0) <= e.error_bound());
      CHECK(e.error_bound() <= 1e-10);
    }
  }
  SUBCASE("1-D contraction with alpha = 1") {
    const GHOperator op = scalar(0.5);
    const PsiEvaluation e = psi_inverse_eval(op, linear_orbit(op), constant_map(one_d(1.0), NormKind::sup()), one_d(5.0), policy);
    CHECK(std::abs(e.value.coords()[0] - 2.0) <= policy.tol);
  }
}

TEST_CASE("psi round trip and truncation certification") {
  const SeriesPolicy policy{1e-9, 10000};
  const GHOperator op = tail_shift();
  const Perturbation beta = sine_perturbation(0.05, 1.0, {-2, 2}, NormKind::sup());
  const Perturbation alpha_p = sine_perturbation(0.7, 2.0, {-1, 3}, NormKind::sup());
  const BoundedMap alpha{[alpha_p](const StateVector& x) { return alpha_p(x); }, alpha_p.sup_bound(),
                         alpha_p.lip_bound()};
  for (const bool perturbed : {false, true}) {
    const OrbitMap r = perturbed ? perturbed_orbit(op, beta) : linear_orbit(op);
    for (const StateVector& x : samples(SampleDomain::sparse_window({-12, 12}), NormKind::sup(), 60, 21)) {
      const PsiEvaluation at_x = psi_inverse_eval(op, r, alpha, x, policy);
      const StateVector rx = r.forward(x).point;
      const PsiEvaluation at_rx = psi_inverse_eval(op, r, alpha, rx, policy);
      const StateVector round_trip = at_rx.value - op.apply(at_x.value);
      CHECK(op.norm(round_trip - alpha.eval(x)) <= 2.0 * policy.tol);

      const PsiEvaluation doubled = psi_inverse_eval(op, r, alpha, x, policy, 2 * at_x.K);
      CHECK(op.norm(doubled.value - at_x.value) <= series_tail_bound(op.constants(), alpha.sup_bound, at_x.K));
      CHECK(at_x.error_bound() <= policy.tol * 1.01);
      CHECK(y_membership_residual(op, at_x.value) == 0.0);
    }
  }
}

TEST_CASE("solve_h closed forms") {
  const SeriesPolicy policy{1e-13, 10000};
  SUBCASE("zero perturbation gives the identity") {
    const GHOperator op = tail_shift();
    const ConjugacyMap h = solve_h(op, zero_perturbation(), 0.2, policy, 1e-10);
    const StateVector x = StateVector::sparse(Sparse{{-1, 0.5}, {2, -0.25}});
    CHECK(h.h(x).value.is_zero());
    CHECK(eval_H(h, x).value.identical(x));
    CHECK(h.picard_depth() == 0);
  }
  SUBCASE("1-D contraction") {
    const GHOperator op = scalar(0.5);
    const ConjugacyMap h = solve_h(op, constant_perturbation(one_d(0.1), NormKind::sup()), 0.5, policy, 1e-13);
    CHECK(eval_H(h, one_d(1.0)).value.coords()[0] == doctest::Approx(1.2).epsilon(1e-12));
    for (double x = -3.0; x <= 3.0; x += 0.37) {
      const MapEvaluation e = h.h(one_d(x));
      CHECK(std::abs(e.value.coords()[0] - 0.2) <= 1e-12);
      CHECK(std::abs(e.value.coords()[0] - 0.2) <= e.error_bound + 1e-15);
    }
  }
  SUBCASE("1-D dilation") {
    const GHOperator op = scalar(2.0);
    const ConjugacyMap h = solve_h(op, constant_perturbation(one_d(0.1), NormKind::sup()), 0.5, policy, 1e-13);
    for (double x = -3.0; x <= 3.0; x += 0.37) {
      CHECK(std::abs(eval_H(h, one_d(x)).value.coords()[0] - (x - 0.1)) <= 1e-12);
    }
  }
}

TEST_CASE("solve_h preconditions") {
  const GHOperator op = tail_shift();
  const Perturbation big = sine_perturbation(0.1, 1.0, {0, 0}, NormKind::sup());
  const std::string msg = error_of([&] { solve_h(op, big, 0.2, {}, 1e-6); });
  CHECK(msg.find("eps = gamma (1 - t) / (c d (1 + t))") != std::string::npos);
  CHECK_THROWS_AS(solve_h(op, zero_perturbation(), 1.5, {}, 1e-6), PreconditionError);
  CHECK_THROWS_AS(solve_h(op, zero_perturbation(), 0.5, {}, 0.0), PreconditionError);
  CHECK_THROWS_AS(solve_h_prime(op, sine_perturbation(0.6, 1.0, {0, 0}, NormKind::sup()), {}), PreconditionError);
}

TEST_CASE("solve_h_prime closed forms") {
  const SeriesPolicy policy{1e-13, 10000};
  SUBCASE("zero perturbation") {
    const ConjugacyMap hp = solve_h_prime(tail_shift(), zero_perturbation(), policy);
    CHECK(hp.h(StateVector::sparse(Sparse{{0, 1.0}})).value.is_zero());
  }
  SUBCASE("1-D contraction inverts H") {
    const GHOperator op = scalar(0.5);
    const Perturbation beta = constant_perturbation(one_d(0.1), NormKind::sup());
    const ConjugacyMap hp = solve_h_prime(op, beta, policy);
    const ConjugacyMap h = solve_h(op, beta, 0.5, policy, 1e-13);
    for (double x = -2.0; x <= 2.0; x += 0.25) {
      CHECK(std::abs(hp.h(one_d(x)).value.coords()[0] + 0.2) <= 1e-12);
      CHECK(std::abs(eval_H_prime(hp, eval_H(h, one_d(x)).value).value.coords()[0] - x) <= 1e-12);
    }
    CHECK_THROWS_AS(eval_H_prime(h, one_d(0.0)), PreconditionError);
    CHECK_THROWS_AS(eval_H(hp, one_d(0.0)), PreconditionError);
  }
  SUBCASE("shift value lies in Y") {
    const GHOperator op = tail_shift();
    const ConjugacyMap hp = solve_h_prime(op, sine_perturbation(0.06, 1.0, {-2, 2}, NormKind::sup()), policy);
    CHECK(hp.h(StateVector::sparse(Sparse{{0, 1.0}})).value.at(1) == 0.0);
    const MapEvaluation e = hp.h(StateVector::sparse(Sparse{{0, 1.0}, {2, -0.5}}));
    CHECK(e.value.at(1) == 0.0);
    CHECK_FALSE(e.value.is_zero());
  }
}

TEST_CASE("y membership residual") {
  const GHOperator op = tail_shift();
  CHECK(y_membership_residual(op, StateVector::sparse(Sparse{{0, 1.0}, {-4, 2.0}})) == 0.0);
  CHECK(y_membership_residual(op, StateVector::sparse(Sparse{{1, 1.0}})) == 2.0);
  CHECK(y_membership_residual(op, StateVector::sparse(Sparse{{2, 1.0}})) == 0.0);
  const GHOperator d = diag2(0.5, 3.0);
  CHECK(y_membership_residual(d, dense2(1.0, 1.0)) == 0.0);
}

TEST_CASE("verification on closed forms") {
  const SeriesPolicy policy{1e-13, 10000};
  const auto pts = samples(SampleDomain::dense_space(1), NormKind::sup(), 100, 4, 5.0);
  for (const double a : {0.5, 2.0}) {
    const GHOperator op = scalar(a);
    const Perturbation beta = constant_perturbation(one_d(0.1), NormKind::sup());
    const ConjugacyMap h = solve_h(op, beta, 0.5, policy, 1e-13);
    const ConjugacyMap hp = solve_h_prime(op, beta, policy);
    const VerificationReport f = verify_conjugacy(h, pts);
    const VerificationReport b = verify_conjugacy(hp, pts);
    const InverseReport inv = verify_inverse(h, hp, pts);
    CHECK(f.max_residual <= 1e-12);
    CHECK(b.max_residual <= 1e-12);
    CHECK(inv.hprime_after_h.max_residual <= 1e-10);
    CHECK(inv.h_after_hprime.max_residual <= 1e-10);
    CHECK(f.within_bounds);
    CHECK(b.within_bounds);
    CHECK(inv.hprime_after_h.within_bounds);
    CHECK(inv.h_after_hprime.within_bounds);
  }
  SUBCASE("zero perturbation gives exact zeros") {
    const GHOperator op = tail_shift();
    const auto sparse_pts = samples(SampleDomain::sparse_window({-10, 10}), NormKind::sup(), 50, 8);
    const ConjugacyMap h = solve_h(op, zero_perturbation(), 0.2, policy, 1e-10);
    const ConjugacyMap hp = solve_h_prime(op, zero_perturbation(), policy);
    CHECK(verify_conjugacy(h, sparse_pts).max_residual == 0.0);
    CHECK(verify_conjugacy(hp, sparse_pts).max_residual == 0.0);
    const InverseReport inv = verify_inverse(h, hp, sparse_pts);
    CHECK(inv.hprime_after_h.max_residual == 0.0);
    CHECK(inv.h_after_hprime.max_residual == 0.0);
  }
}

TEST_CASE("shift conjugacy against certified bounds") {
  const GHOperator op = tail_shift();
  const double gamma = 0.2;
  const double eps = admissible_eps(op, gamma);
  const Perturbation beta = sine_perturbation(eps, 1.0, {-2, 2}, NormKind::sup());
  const SeriesPolicy policy{1e-8, 10000};
  const ConjugacyMap h = solve_h(op, beta, gamma, policy, 1e-7);
  const ConjugacyMap hp = solve_h_prime(op, beta, policy);
  CHECK(h.contraction_factor() <= gamma * (1.0 + 1e-12));
  CHECK(h.picard_error() <= 1e-7);

  const auto pts = samples(SampleDomain::sparse_window({-12, 12}), NormKind::sup(), 40, 99);
  const VerificationReport f = verify_conjugacy(h, pts);
  const VerificationReport b = verify_conjugacy(hp, pts);
  const InverseReport inv = verify_inverse(h, hp, pts);
  CHECK(f.within_bounds);
  CHECK(b.within_bounds);
  CHECK(inv.hprime_after_h.within_bounds);
  CHECK(inv.h_after_hprime.within_bounds);
  CHECK(f.max_certified_bound < 1e-5);

  for (const StateVector& x : pts) {
    const MapEvaluation e = h.h(x);
    CHECK(op.norm(e.value) <= gamma + e.error_bound);
    CHECK(std::abs(e.value.at(1)) <= policy.tol * op.norms().T);
    CHECK(std::abs(hp.h(x).value.at(1)) <= policy.tol * op.norms().T);
    // Continuity bound covers nearby points.
    const StateVector y = x + StateVector::sparse(Sparse{{0, 1e-3}});
    const MapEvaluation ey = h.h(y);
    CHECK(op.norm(e.value - ey.value) <= h.continuity_bound(1e-3) + e.error_bound + ey.error_bound);
    const MapEvaluation px = hp.h(x);
    const MapEvaluation py = hp.h(y);
    CHECK(op.norm(px.value - py.value) <= hp.continuity_bound(1e-3) + px.error_bound + py.error_bound);
  }

  SUBCASE("Picard increments contract") {
    const PicardTrace trace = h.picard_trace(pts[3]);
    REQUIRE(trace.increments.size() == static_cast<std::size_t>(h.picard_depth()));
    for (std::size_t m = 1; m < trace.increments.size(); ++m) {
      CHECK(trace.increments[m] <= h.contraction_factor() * trace.increments[m - 1] + policy.tol);
    }
    CHECK_THROWS_AS(hp.picard_trace(pts[0]), PreconditionError);
  }
}

TEST_CASE("matrix conjugacy with a non-normal operator") {
  Eigen::MatrixXd T(3, 3);
  T << 0.4, 0.3, 0.1, 0.0, 2.5, 0.2, 0.1, 0.0, 0.3;
  const GHOperator op = GHOperator::make_matrix(T);
  const double eps = admissible_eps(op, 0.3);
  const Perturbation beta = saturating_perturbation(eps, 1.0, {0, 2}, NormKind::sup());
  const SeriesPolicy policy{1e-9, 10000};
  const ConjugacyMap h = solve_h(op, beta, 0.3, policy, 1e-8);
  const ConjugacyMap hp = solve_h_prime(op, beta, policy);
  const auto pts = samples(SampleDomain::dense_space(3), NormKind::sup(), 30, 6);
  CHECK(verify_conjugacy(h, pts).within_bounds);
  CHECK(verify_conjugacy(hp, pts).within_bounds);
  const InverseReport inv = verify_inverse(h, hp, pts);
  CHECK(inv.hprime_after_h.within_bounds);
  CHECK(inv.h_after_hprime.within_bounds);
  for (const auto& x : pts) CHECK(y_membership_residual(op, h.h(x).value) <= policy.tol * op.norms().T + 1e-14);
}

TEST_CASE("concurrent evaluation shares one memo") {
  const GHOperator op = tail_shift();
  const Perturbation beta = sine_perturbation(0.05, 1.0, {-2, 2}, NormKind::sup());
  const ConjugacyMap h = solve_h(op, beta, 0.2, {1e-8, 10000}, 1e-6);
  const auto pts = samples(SampleDomain::sparse_window({-5, 5}), NormKind::sup(), 16, 1);
  std::vector<MapEvaluation> first(pts.size()), second(pts.size());
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        MapEvaluation e = h.h(pts[i]);
        if (w == 0) first[i] = e;
      }
    });
  }
  for (auto& t : workers) t.join();
  const ConjugacyMap copy = h;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    second[i] = copy.h(pts[i]);
    CHECK(first[i].value.identical(second[i].value));
    CHECK(first[i].error_bound == second[i].error_bound);
  }
}
