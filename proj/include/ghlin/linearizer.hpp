#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ghlin/conjugacy.hpp"
#include "ghlin/gh_operator.hpp"
#include "ghlin/perturbation.hpp"
#include "ghlin/state_vector.hpp"

namespace ghlin {

/// Largest admissible Holder exponent
///   min(-ln||T^-1|_N|| / ln||T||, -ln||T|_M|| / ln||T^-1||), capped at 1.
/// A term is dropped when its subspace is trivial or its denominator is <= 0.
double theta_bound(const GHOperator& op);

/// max(||T|_M|| ||T^-1||^theta, ||T^-1|_N|| ||T||^theta); below 1 at admissible theta.
double holder_ratio(const GHOperator& op, double theta);

/// C = 2 eps ||P_M|| sum_{k>=0} a^k b^{(k+1)theta} + 2 eps ||P_N|| sum_{k>=1} c^k e^{(k-1)theta}
/// with a = ||T|_M||, b = ||T^-1|| + eps s, s = ||T^-1||^2 / (1 - ||T^-1|| eps),
/// c = ||T^-1|_N||, e = ||T|| + eps, in closed form.
double holder_constant(const GHOperator& op, double theta, double eps);

struct HolderCertificate {
  double theta = 0.0;
  double C = 0.0;
  double domain_diameter = 0.0;
};

struct HolderReport {
  double max_ratio = 0.0;
  /// Largest ratio minus the share of certified evaluation error at that pair.
  double max_ratio_less_inflation = 0.0;
  double max_inflation = 0.0;
  std::size_t pairs_used = 0;
  bool within_bound = true;  ///< ratio <= C + inflation for every pair
};

/// Ratios ||h(x) - h(x')|| / ||x - x'||^theta of a Backward map over the given
/// pairs. Pairs farther apart than the certificate's diameter are skipped.
HolderReport empirical_holder(const ConjugacyMap& map, const HolderCertificate& cert,
                              std::span<const std::pair<StateVector, StateVector>> pairs);

struct LinearizationProblem {
  VectorMap F;
  StateVector p;
  GHOperator DFp;
  double gamma = 0.5;
  double cutoff_r = 1.0;
  std::optional<double> theta;
  /// Lipschitz bound of alpha(y) = F(y + p) - p - DFp y on the ball of the given radius.
  std::function<double(double)> alpha_lip_on_ball;
  bool lip_certified = true;
  double min_cutoff_r = 1e-12;
};

struct LinearizationResult {
  ConjugacyMap forward;
  ConjugacyMap backward;
  StateVector p;
  double U_radius = 0.0;
  double eps = 0.0;
  double gamma = 0.0;
  double alpha_lip = 0.0;
  Perturbation beta;
  HolderCertificate cert;
  bool certified = true;

  /// H(y) = K(y - p) with K = I + h' conjugating S = DFp + beta to DFp.
  MapEvaluation H(const StateVector& y) const;
};

/// Builds the local linearization of F around its fixed point p.
LinearizationResult linearize(const LinearizationProblem& problem, const SeriesPolicy& policy, double picard_tol);

struct LinearizationResidual {
  double residual = 0.0;
  double certified_bound = 0.0;
};

/// ||H(F(x)) - DFp(H(x))|| against its certified bound, for ||x - p|| <= U_radius.
LinearizationResidual linearization_residual(const LinearizationResult& result, const LinearizationProblem& problem,
                                             const StateVector& x);

}  // namespace ghlin
