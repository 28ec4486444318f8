#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ghlin/gh_operator.hpp"
#include "ghlin/state_vector.hpp"

namespace ghlin {

enum class Certification { Analytic, Sampled };

/// Closed index range [lo, hi].
struct IndexWindow {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t size() const { return hi - lo + 1; }
};

using VectorMap = std::function<StateVector(const StateVector&)>;

/// A bounded Lipschitz map beta: X -> X with certified bounds
/// ||beta||_inf <= sup_bound and Lip(beta) <= lip_bound.
class Perturbation {
 public:
  Perturbation(VectorMap eval, double sup_bound, double lip_bound,
               Certification certification = Certification::Analytic, std::size_t n_samples = 0,
               std::string description = {});

  StateVector operator()(const StateVector& x) const { return eval_(x); }

  double sup_bound() const { return sup_bound_; }
  double lip_bound() const { return lip_bound_; }
  Certification certification() const { return certification_; }
  /// Number of samples behind a Sampled certification.
  std::size_t n_samples() const { return n_samples_; }
  bool certified() const { return certification_ == Certification::Analytic; }
  /// True when beta is identically zero (both bounds vanish).
  bool is_zero() const { return sup_bound_ == 0.0 && lip_bound_ == 0.0; }
  const std::string& description() const { return description_; }

 private:
  VectorMap eval_;
  double sup_bound_;
  double lip_bound_;
  Certification certification_;
  std::size_t n_samples_;
  std::string description_;
};

Perturbation zero_perturbation();
/// beta(x) = b.
Perturbation constant_perturbation(const StateVector& b, NormKind norm);
/// beta(x)_n = a sin(omega x_n) for n in the window, 0 elsewhere.
Perturbation sine_perturbation(double amplitude, double frequency, IndexWindow window, NormKind norm);
/// beta(x)_n = a tanh(s x_n) for n in the window, 0 elsewhere.
Perturbation saturating_perturbation(double amplitude, double slope, IndexWindow window, NormKind norm);

/// Radial cutoff chi(s) = 1 on [0, r], 0 on [2r, inf), affine in between.
struct CutoffProfile {
  double r = 0.0;
  double chi(double s) const;
};

/// beta(x) = chi(||x||) alpha(x). Requires alpha(0) = 0 and a Lipschitz
/// bound L of alpha on the ball of radius 2r; then ||beta|| <= 2rL,
/// Lip(beta) <= 3L and beta = alpha on the ball of radius r.
Perturbation cutoff(VectorMap alpha, double alpha_lip_on_ball, CutoffProfile profile, NormKind norm,
                    Certification certification = Certification::Analytic);

/// Pair-sampling estimate of Lip(f) on the ball of the given radius around
/// the origin. Not a certificate: callers flag the result as Sampled.
double estimate_lipschitz_on_ball(const VectorMap& f, const StateVector& like, double radius,
                                  NormKind norm, std::optional<IndexWindow> window, std::size_t n_pairs,
                                  std::uint64_t seed);

struct SInverseResult {
  StateVector x;
  double error_bound = 0.0;     ///< ||x - S^-1 y||
  double residual_bound = 0.0;  ///< ||S x - y||
  int iterations = 0;
  std::vector<double> increments;
};

/// Solves (T + beta)(x) = y by the Picard iteration x <- T^-1 (y - beta(x))
/// started at T^-1 y. Requires q = Lip(beta) ||T^-1|| < 1 and stops once the
/// a-posteriori bound q/(1-q) ||x_{k+1} - x_k|| and the residual are <= tol.
SInverseResult solve_S_inverse(const GHOperator& op, const Perturbation& beta, const StateVector& y,
                               double tol, int iteration_cap = 10000);

/// S(x) = T x + beta(x).
StateVector apply_S(const GHOperator& op, const Perturbation& beta, const StateVector& x);

}  // namespace ghlin
