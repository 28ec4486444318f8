#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ghlin/state_vector.hpp"

namespace ghlin {

/// Weights of a bilateral weighted backward shift: an explicit core window
/// [core_lo, core_hi] and constant tails on either side. An empty core uses
/// core_lo = 1, so the left tail covers n <= 0 and the right tail n > 0.
struct WeightSpec {
  std::int64_t core_lo = 1;
  std::vector<double> core;
  double left_tail = 0.0;
  double right_tail = 0.0;

  std::int64_t core_hi() const { return core_lo + static_cast<std::int64_t>(core.size()) - 1; }
  double weight(std::int64_t n) const;
  /// Throws PreconditionError if a weight is zero or not finite.
  void validate() const;
};

struct ShiftCriterion {
  bool holds = false;
  double left_margin = 0.0;   ///< lim_n sup_k |w_{-k} ... w_{-k-n}|^{1/n}
  double right_margin = 0.0;  ///< lim_n inf_k |w_k ... w_{k+n}|^{1/n}
};

/// Evaluates both limits in closed form. For eventually constant weights
/// the core contributes a bounded factor that the n-th root removes, so the
/// limits are the absolute tail values.
ShiftCriterion check_shift_criterion(const WeightSpec& weights);

/// Decay constants: ||T^n y|| <= c t^n ||y|| on M, ||T^-n z|| <= c t^n ||z||
/// on N, and d = max(||P_M||, ||P_N||), all in the ambient norm. n_max is the
/// first power at which both scaled norms drop to <= 1.
struct Constants {
  double c = 1.0;
  double t = 0.5;
  double d = 1.0;
  int n_max = 0;
};

/// Upper bounds on the ambient operator norms used downstream.
struct RestrictionNorms {
  double T_on_M = 0.0;     ///< ||T|_M||
  double Tinv_on_N = 0.0;  ///< ||T^-1|_N||
  double T = 0.0;
  double Tinv = 0.0;
};

struct MatrixOptions {
  /// Eigenvalues with ||lambda| - 1| below this are rejected.
  double spectral_tol = 1e-8;
  /// Projection identities must hold to this tolerance.
  double projection_tol = 1e-10;
};

inline constexpr int kDefaultPowerCap = 10000;

/// Operator norm of a matrix in the given ambient norm. Exact for the sup,
/// l^1 and l^2 norms; for other p the Riesz-Thorin interpolation bound
/// ||A||_1^{1/p} ||A||_inf^{1-1/p} is returned.
double operator_norm(const Eigen::MatrixXd& a, NormKind kind);

/// An invertible operator T with a generalized hyperbolic splitting X = M + N,
/// T(M) in M and T^-1(N) in N. Immutable once built.
class GHOperator {
 public:
  enum class Backend { Matrix, Shift };

  /// Bilateral weighted backward shift (B_w x)_n = w_{n+1} x_{n+1} with the
  /// splitting M = {x_n = 0 for n > 0}, N = {x_n = 0 for n <= 0}.
  static GHOperator make_shift(const WeightSpec& weights, NormKind norm = NormKind::sup(),
                               std::optional<double> t = std::nullopt,
                               int power_cap = kDefaultPowerCap);

  /// Finite-dimensional hyperbolic operator; M and N are the spectral
  /// subspaces for |lambda| < 1 and |lambda| > 1.
  static GHOperator make_matrix(const Eigen::MatrixXd& t_matrix, NormKind norm = NormKind::sup(),
                                std::optional<double> t = std::nullopt, MatrixOptions options = {},
                                int power_cap = kDefaultPowerCap);

  /// Same operator with constants re-estimated at the given t.
  GHOperator with_t(double t, int power_cap = kDefaultPowerCap) const;

  Backend backend() const { return backend_; }
  bool is_shift() const { return backend_ == Backend::Shift; }
  NormKind norm_kind() const { return norm_; }
  const Constants& constants() const { return constants_; }
  const RestrictionNorms& norms() const { return norms_; }

  double spectral_radius_M() const { return rho_m_; }
  double spectral_radius_Ninv() const { return rho_ninv_; }
  bool M_trivial() const { return m_trivial_; }
  bool N_trivial() const { return n_trivial_; }

  const WeightSpec& weights() const;
  const Eigen::MatrixXd& matrix() const;
  const Eigen::MatrixXd& inverse_matrix() const;
  const Eigen::MatrixXd& projection_M() const;
  const Eigen::MatrixXd& projection_N() const;
  std::size_t dimension() const;  ///< 0 for the shift backend.

  StateVector apply(const StateVector& x) const;
  StateVector apply_inverse(const StateVector& y) const;
  StateVector project_M(const StateVector& x) const;
  StateVector project_N(const StateVector& x) const;
  StateVector zero_vector() const;
  void check_vector(const StateVector& x) const;

  double norm(const StateVector& x) const { return ghlin::norm(x, norm_); }

  /// Bounds on ||T^k P_M|| / scale^k for k = 0..kmax (exact for shifts).
  std::vector<double> stable_power_norms(int kmax, double scale = 1.0) const;
  /// Bounds on ||T^-k P_N|| / scale^k for k = 0..kmax.
  std::vector<double> unstable_power_norms(int kmax, double scale = 1.0) const;
  /// ||T^k|| for k = 0..kmax.
  std::vector<double> power_norms(int kmax) const;
  /// ||T^-k|| for k = 0..kmax.
  std::vector<double> inverse_power_norms(int kmax) const;

 private:
  GHOperator() = default;
  void install(std::optional<double> t, int power_cap);

  Backend backend_ = Backend::Shift;
  NormKind norm_ = NormKind::sup();
  WeightSpec weights_;
  Eigen::MatrixXd t_, t_inv_, p_m_, p_n_;
  Constants constants_;
  RestrictionNorms norms_;
  double rho_m_ = 0.0;
  double rho_ninv_ = 0.0;
  bool m_trivial_ = false;
  bool n_trivial_ = false;

  friend Constants estimate_constants(const GHOperator&, std::optional<double>, int);
};

/// Certifies (c, t, d). Without t, uses t = (rho_max + 1)/2 where rho_max is
/// the larger of the spectral radii of T|_M and T^-1|_N.
Constants estimate_constants(const GHOperator& op, std::optional<double> t = std::nullopt,
                             int power_cap = kDefaultPowerCap);

/// eps = gamma (1 - t) / (c d (1 + t)): the largest sup norm and Lipschitz
/// constant of a perturbation for which the conjugacy satisfies ||h|| <= gamma.
double admissible_eps(const Constants& constants, double gamma);
double admissible_eps(const GHOperator& op, double gamma);

/// Equivalent norm ||x||_* = max(sup_n ||T^n P_M x||/t^n, sup_n ||T^-n P_N x||/t^n)
/// under which T contracts M and T^-1 contracts N by the factor t. The sups
/// are attained for n <= n_max.
class AdaptedNorm {
 public:
  AdaptedNorm(const GHOperator& op, double t, int power_cap = kDefaultPowerCap);

  double operator()(const StateVector& x) const;
  double t() const { return t_; }
  int n_max() const { return n_max_; }
  /// ||x|| / 2 <= ||x||_* <= upper_equivalence() * ||x||.
  double upper_equivalence() const { return upper_; }

 private:
  GHOperator op_;
  double t_;
  int n_max_;
  double upper_;
};

}  // namespace ghlin
