#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ghlin/gh_operator.hpp"
#include "ghlin/perturbation.hpp"
#include "ghlin/state_vector.hpp"

namespace ghlin {

/// Truncation policy for the series evaluating Psi^-1.
struct SeriesPolicy {
  double tol = 1e-8;    ///< certified truncation error per evaluation
  int k_cap = 10000;    ///< hard cap on series terms
  void validate() const;
};

/// One step of an orbit of R, with a bound on its distance from the exact image.
struct OrbitStep {
  StateVector point;
  double error = 0.0;
};

/// The uniform homeomorphism R in Psi(phi) = phi o R - T o phi.
struct OrbitMap {
  std::function<OrbitStep(const StateVector&)> forward;
  std::function<OrbitStep(const StateVector&)> inverse;
  double forward_lip = 0.0;  ///< Lip(R)
  double inverse_lip = 0.0;  ///< Lip(R^-1)
};

/// R = T.
OrbitMap linear_orbit(const GHOperator& op);
/// R = S = T + beta, with S^-1 by Picard iteration.
OrbitMap perturbed_orbit(const GHOperator& op, const Perturbation& beta);

/// A bounded map alpha with ||alpha||_inf <= sup_bound and Lip(alpha) <= lip_bound.
struct BoundedMap {
  VectorMap eval;
  double sup_bound = 0.0;
  double lip_bound = 0.0;
};

/// ||Psi^-1|| <= c d (1 + t) / (1 - t).
double psi_inverse_norm_bound(const Constants& k);

/// Combined tail bound of both truncated series after K terms:
/// c d t^(K+1) (1 + t) / (1 - t) * A.
double series_tail_bound(const Constants& k, double sup_bound, int K);

/// Smallest K whose tail bound is <= tol. Throws CapExceededError past k_cap.
int series_cutoff(const Constants& k, double sup_bound, double tol, int k_cap);

struct PsiEvaluation {
  StateVector value;
  int K = 0;
  double truncation_bound = 0.0;
  double orbit_bound = 0.0;     ///< from inexact orbit points of R
  double rounding_bound = 0.0;
  double error_bound() const { return truncation_bound + orbit_bound + rounding_bound; }
};

/// Psi^-1(alpha)(x) = sum_{k>=0} T^k P_M alpha(R^{-k-1} x) - sum_{k>=1} T^-k P_N alpha(R^{k-1} x),
/// with the M series cut after k = K and the N series after k = K + 1.
PsiEvaluation psi_inverse_eval(const GHOperator& op, const OrbitMap& r, const BoundedMap& alpha,
                               const StateVector& x, const SeriesPolicy& policy,
                               std::optional<int> K = std::nullopt);

/// ||P_M T P_N v||: zero exactly when v lies in Y = M + T^-1(N).
double y_membership_residual(const GHOperator& op, const StateVector& v);

enum class Direction {
  Forward,   ///< h with H o T = S o H
  Backward,  ///< h' with H' o S = T o H'
};

struct MapEvaluation {
  StateVector value;
  double error_bound = 0.0;
};

/// Largest increment ||phi_m - phi_{m-1}|| per Picard level m on the points
/// that level was evaluated at (Forward maps only).
struct PicardTrace {
  std::vector<double> increments;
};

/// Lazily evaluated conjugacy H = I + h (Forward) or H' = I + h' (Backward).
/// Copies share one memo, which is safe for concurrent use.
class ConjugacyMap {
 public:
  Direction direction() const;
  const GHOperator& op() const;
  const Perturbation& beta() const;
  const SeriesPolicy& policy() const;

  /// h(x) (or h'(x)) with a certified error bound.
  MapEvaluation h(const StateVector& x) const;
  /// x + h(x).
  MapEvaluation H(const StateVector& x) const;
  /// Bound on ||h(a) - h(b)|| over all pairs with ||a - b|| <= delta, for the exact map.
  double continuity_bound(double delta) const;
  /// Certified bound on ||h||_inf.
  double sup_bound() const;

  int series_terms() const;
  int picard_depth() const;          ///< 0 for Backward maps
  double contraction_factor() const; ///< Lip(Phi_1) bound q (Forward)
  double picard_error() const;       ///< q^depth ||h||_inf bound (Forward)
  PicardTrace picard_trace(const StateVector& x) const;

  struct Impl;

 private:
  explicit ConjugacyMap(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;

  friend ConjugacyMap solve_h(const GHOperator&, const Perturbation&, double, const SeriesPolicy&, double);
  friend ConjugacyMap solve_h_prime(const GHOperator&, const Perturbation&, const SeriesPolicy&);
};

/// The fixed point h = Psi_1^-1(beta o (I + h)) with R = T, unrolled to the
/// Picard depth that brings the iteration error below picard_tol.
/// Requires ||beta||_inf, Lip(beta) <= admissible_eps(op, gamma) and
/// Lip(beta) ||T^-1|| < 1.
ConjugacyMap solve_h(const GHOperator& op, const Perturbation& beta, double gamma, const SeriesPolicy& policy,
                     double picard_tol);

/// h' = Psi_2^-1(-beta) with R = S, evaluated directly. Requires Lip(beta) ||T^-1|| < 1.
ConjugacyMap solve_h_prime(const GHOperator& op, const Perturbation& beta, const SeriesPolicy& policy);

MapEvaluation eval_H(const ConjugacyMap& forward, const StateVector& x);
MapEvaluation eval_H_prime(const ConjugacyMap& backward, const StateVector& x);

struct PointResidual {
  double residual = 0.0;
  double certified_bound = 0.0;
  double y_membership = 0.0;
};

struct VerificationReport {
  std::vector<PointResidual> per_point;
  double max_residual = 0.0;
  double max_certified_bound = 0.0;
  double max_y_membership = 0.0;
  bool within_bounds = true;  ///< every residual <= its own certified bound
};

/// Forward: ||H(Tx) - T(H(x)) - beta(H(x))||. Backward: ||H'(Sx) - T(H'(x))||.
VerificationReport verify_conjugacy(const ConjugacyMap& map, std::span<const StateVector> samples);

struct InverseReport {
  VerificationReport hprime_after_h;  ///< ||H'(H(x)) - x||
  VerificationReport h_after_hprime;  ///< ||H(H'(x)) - x||
};

InverseReport verify_inverse(const ConjugacyMap& forward, const ConjugacyMap& backward,
                             std::span<const StateVector> samples);

}  // namespace ghlin
