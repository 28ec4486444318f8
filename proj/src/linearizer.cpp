#include "ghlin/linearizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ghlin/errors.hpp"
#include "ghlin/parallel.hpp"

namespace ghlin {

namespace {

constexpr double kUnit = std::numeric_limits<double>::epsilon();

void require_contracting_restrictions(const GHOperator& op) {
  const auto& n = op.norms();
  if ((!op.M_trivial() && !(n.T_on_M < 1.0)) || (!op.N_trivial() && !(n.Tinv_on_N < 1.0))) {
    std::ostringstream msg;
    msg << "restriction norms must be < 1 (renorm with an adapted norm): ||T|_M|| = " << n.T_on_M
        << ", ||T^-1|_N|| = " << n.Tinv_on_N;
    throw PreconditionError(msg.str());
  }
}

std::pair<double, double> projection_norms(const GHOperator& op) {
  if (op.is_shift()) return {op.M_trivial() ? 0.0 : 1.0, op.N_trivial() ? 0.0 : 1.0};
  return {operator_norm(op.projection_M(), op.norm_kind()), operator_norm(op.projection_N(), op.norm_kind())};
}

}  // namespace

double theta_bound(const GHOperator& op) {
  require_contracting_restrictions(op);
  const auto& n = op.norms();
  double theta = 1.0;
  if (!op.N_trivial() && std::log(n.T) > 0.0) theta = std::min(theta, -std::log(n.Tinv_on_N) / std::log(n.T));
  if (!op.M_trivial() && std::log(n.Tinv) > 0.0) theta = std::min(theta, -std::log(n.T_on_M) / std::log(n.Tinv));
  return theta;
}

double holder_ratio(const GHOperator& op, double theta) {
  const auto& n = op.norms();
  double r = 0.0;
  if (!op.M_trivial()) r = std::max(r, n.T_on_M * std::pow(n.Tinv, theta));
  if (!op.N_trivial()) r = std::max(r, n.Tinv_on_N * std::pow(n.T, theta));
  return r;
}

double holder_constant(const GHOperator& op, double theta, double eps) {
  if (!(theta > 0.0 && theta <= 1.0)) throw PreconditionError("Holder exponent theta must lie in (0, 1]");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw PreconditionError("eps must be finite and >= 0");
  if (eps == 0.0) return 0.0;
  const auto& n = op.norms();
  if (!(eps * n.Tinv < 1.0)) {
    std::ostringstream msg;
    msg << "eps too large: need eps < 1/||T^-1|| = " << 1.0 / n.Tinv << ", got " << eps;
    throw PreconditionError(msg.str());
  }
  const auto [pm, pn] = projection_norms(op);
  const double s = n.Tinv * n.Tinv / (1.0 - n.Tinv * eps);
  double C = 0.0;
  if (!op.M_trivial()) {
    const double b = std::pow(n.Tinv + eps * s, theta);
    const double ratio = n.T_on_M * b;
    if (!(ratio < 1.0)) {
      std::ostringstream msg;
      msg << "eps too large for this theta: ||T|_M|| (||T^-1|| + eps s)^theta = " << ratio << " >= 1";
      throw PreconditionError(msg.str());
    }
    C += 2.0 * eps * pm * b / (1.0 - ratio);
  }
  if (!op.N_trivial()) {
    const double e = std::pow(n.T + eps, theta);
    const double ratio = n.Tinv_on_N * e;
    if (!(ratio < 1.0)) {
      std::ostringstream msg;
      msg << "eps too large for this theta: ||T^-1|_N|| (||T|| + eps)^theta = " << ratio << " >= 1";
      throw PreconditionError(msg.str());
    }
    C += 2.0 * eps * pn * n.Tinv_on_N / (1.0 - ratio);
  }
  return C;
}

HolderReport empirical_holder(const ConjugacyMap& map, const HolderCertificate& cert,
                              std::span<const std::pair<StateVector, StateVector>> pairs) {
  if (map.direction() != Direction::Backward) {
    throw PreconditionError("empirical_holder needs the Backward map h'");
  }
  if (!(cert.theta > 0.0 && cert.theta <= 1.0) || !(cert.C >= 0.0)) {
    throw PreconditionError("Holder certificate needs theta in (0, 1] and C >= 0");
  }
  const GHOperator& op = map.op();
  struct PairResult {
    bool used = false;
    double ratio = 0.0;
    double inflation = 0.0;
  };
  std::vector<PairResult> results(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& [x, y] = pairs[i];
    const double dist = op.norm(x - y);
    if (dist == 0.0 || dist > cert.domain_diameter) return;
    const MapEvaluation hx = map.h(x);
    const MapEvaluation hy = map.h(y);
    const double scale = std::pow(dist, cert.theta);
    const double rounding = 4.0 * kUnit * (op.norm(hx.value) + op.norm(hy.value));
    results[i] = {true, op.norm(hx.value - hy.value) / scale, (hx.error_bound + hy.error_bound + rounding) / scale};
  });

  HolderReport report;
  for (const auto& r : results) {
    if (!r.used) continue;
    ++report.pairs_used;
    report.max_ratio = std::max(report.max_ratio, r.ratio);
    report.max_ratio_less_inflation = std::max(report.max_ratio_less_inflation, r.ratio - r.inflation);
    report.max_inflation = std::max(report.max_inflation, r.inflation);
    if (!(r.ratio <= cert.C + r.inflation)) report.within_bound = false;
  }
  return report;
}

MapEvaluation LinearizationResult::H(const StateVector& y) const { return backward.H(y - p); }

LinearizationResult linearize(const LinearizationProblem& problem, const SeriesPolicy& policy, double picard_tol) {
  if (!problem.F) throw PreconditionError("linearization needs the map F");
  if (!problem.alpha_lip_on_ball) throw PreconditionError("linearization needs a Lipschitz bound for alpha");
  if (!(problem.gamma > 0.0 && problem.gamma < 1.0)) throw PreconditionError("gamma must lie in (0, 1)");
  if (!(problem.cutoff_r > 0.0)) throw PreconditionError("cutoff_r must be positive");
  const GHOperator& T = problem.DFp;
  T.check_vector(problem.p);
  const double fixed_gap = T.norm(problem.F(problem.p) - problem.p);
  if (!(fixed_gap <= 1e-10)) {
    std::ostringstream msg;
    msg << "p is not a fixed point: ||F(p) - p|| = " << fixed_gap;
    throw PreconditionError(msg.str());
  }

  const double eps = std::min(admissible_eps(T, problem.gamma), 0.9 / T.norms().Tinv);
  const double theta = problem.theta ? *problem.theta : theta_bound(T) / 2.0;
  if (!(theta > 0.0) || !(holder_ratio(T, theta) < 1.0)) {
    std::ostringstream msg;
    msg << "Holder exponent " << theta << " violates the ratio condition: " << holder_ratio(T, theta);
    throw PreconditionError(msg.str());
  }

  // Shrink r until the cut-off nonlinearity is small enough everywhere.
  double r = problem.cutoff_r;
  double L = 0.0;
  double beta_eps = 0.0;
  double C = 0.0;
  for (;;) {
    if (r < problem.min_cutoff_r) {
      std::ostringstream msg;
      msg << "cutoff radius fell below " << problem.min_cutoff_r << ": nonlinearity too steep for eps = " << eps;
      throw PreconditionError(msg.str());
    }
    L = problem.alpha_lip_on_ball(2.0 * r);
    if (!(L >= 0.0) || !std::isfinite(L)) throw PreconditionError("Lipschitz bound of alpha must be finite and >= 0");
    beta_eps = std::max(2.0 * r * L, 3.0 * L);
    if (beta_eps <= eps) {
      try {
        C = holder_constant(T, theta, beta_eps);
        break;
      } catch (const PreconditionError&) {
      }
    }
    r /= 2.0;
  }

  const StateVector p = problem.p;
  VectorMap F = problem.F;
  VectorMap alpha = [F, p, T](const StateVector& y) { return F(y + p) - p - T.apply(y); };
  Perturbation beta = cutoff(std::move(alpha), L, CutoffProfile{r}, T.norm_kind(),
                             problem.lip_certified ? Certification::Analytic : Certification::Sampled);

  ConjugacyMap fwd = solve_h(T, beta, problem.gamma, policy, picard_tol);
  ConjugacyMap bwd = solve_h_prime(T, beta, policy);
  return LinearizationResult{std::move(fwd), std::move(bwd), p, r, eps, problem.gamma, L, std::move(beta),
                             HolderCertificate{theta, C, std::min(2.0 * r, 0.99)}, problem.lip_certified};
}

LinearizationResidual linearization_residual(const LinearizationResult& result, const LinearizationProblem& problem,
                                             const StateVector& x) {
  const GHOperator& T = problem.DFp;
  const ConjugacyMap& K = result.backward;
  const StateVector y = x - result.p;
  const StateVector fx = problem.F(x);
  const StateVector gy = fx - result.p;
  const MapEvaluation hx = K.H(y);
  const MapEvaluation hfx = K.H(gy);
  const StateVector rhs = T.apply(hx.value);

  LinearizationResidual out;
  out.residual = T.norm(hfx.value - rhs);
  // gy stands in for S(y); the gap is rounding in x - p, F and the subtraction.
  const double lip_F = T.norms().T + result.alpha_lip;
  const double delta = 4.0 * kUnit *
                       (lip_F * (T.norm(x) + T.norm(result.p)) + T.norm(fx) + T.norm(result.p) +
                        T.norms().T * T.norm(y));
  const double dim = static_cast<double>(T.dimension()) + 1.0;
  out.certified_bound = hfx.error_bound + T.norms().T * hx.error_bound + delta + K.continuity_bound(delta) +
                        4.0 * dim * kUnit * (T.norm(hfx.value) + T.norms().T * T.norm(hx.value));
  return out;
}

}  // namespace ghlin
