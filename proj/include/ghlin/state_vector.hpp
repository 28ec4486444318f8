#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ghlin {

/// Ambient norm of the state space: an l^p norm (p >= 1, finite) or the
/// sup norm.
class NormKind {
 public:
  enum class Tag { Lp, Sup };

  static NormKind sup() { return NormKind(Tag::Sup, 0.0); }
  static NormKind lp(double p);

  Tag tag() const { return tag_; }
  double p() const { return p_; }
  bool is_sup() const { return tag_ == Tag::Sup; }

  friend bool operator==(const NormKind&, const NormKind&) = default;

 private:
  NormKind(Tag tag, double p) : tag_(tag), p_(p) {}
  Tag tag_;
  double p_;
};

struct SparseEntry {
  std::int64_t index;
  double value;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// A point of X: either a dense coordinate vector or a finitely supported
/// sequence indexed by Z. Sparse vectors keep their entries sorted by index
/// and never store an exact zero.
class StateVector {
 public:
  /// Empty sparse vector.
  StateVector() : data_(std::vector<SparseEntry>{}) {}

  static StateVector dense(Eigen::VectorXd coords);
  static StateVector dense_zero(std::size_t n);
  static StateVector sparse(const std::map<std::int64_t, double>& coords);
  /// Entries need not be sorted; duplicate indices are summed.
  static StateVector sparse(std::vector<SparseEntry> entries);
  /// A vector of the same backend (and dimension) holding zeros.
  static StateVector zero_like(const StateVector& v);

  bool is_dense() const { return std::holds_alternative<Eigen::VectorXd>(data_); }
  bool is_sparse() const { return !is_dense(); }

  /// Dense dimension; 0 for sparse vectors.
  std::size_t dimension() const;
  const Eigen::VectorXd& coords() const;
  std::span<const SparseEntry> entries() const;

  /// Coordinate at index i (zero outside the support / dimension).
  double at(std::int64_t i) const;
  /// Number of stored coordinates (dense: dimension).
  std::size_t support_size() const;
  bool is_zero() const;

  /// Keep coordinates whose index satisfies pred; dense drops to zero.
  template <typename Pred>
  StateVector restricted(Pred pred) const;

  /// Bitwise equality of the stored representation.
  bool identical(const StateVector& other) const;
  std::size_t hash() const;

  StateVector& operator+=(const StateVector& other);
  StateVector& operator-=(const StateVector& other);
  StateVector& operator*=(double a);

 private:
  explicit StateVector(Eigen::VectorXd v) : data_(std::move(v)) {}
  explicit StateVector(std::vector<SparseEntry> e) : data_(std::move(e)) {}

  std::vector<SparseEntry>& sparse_entries() { return std::get<std::vector<SparseEntry>>(data_); }

  std::variant<std::vector<SparseEntry>, Eigen::VectorXd> data_;

  friend StateVector axpy(double a, const StateVector& x, const StateVector& y);
};

/// Throws PreconditionError unless x and y share backend and dimension.
void require_compatible(const StateVector& x, const StateVector& y);

/// a*x + y. Sparse results never store a coordinate that cancelled to zero.
StateVector axpy(double a, const StateVector& x, const StateVector& y);

double norm(const StateVector& v, NormKind kind);

StateVector operator+(const StateVector& x, const StateVector& y);
StateVector operator-(const StateVector& x, const StateVector& y);
StateVector operator-(const StateVector& x);
StateVector operator*(double a, const StateVector& x);

/// Hash/equality functors keyed on the exact stored bits.
struct StateVectorHash {
  std::size_t operator()(const StateVector& v) const { return v.hash(); }
};
struct StateVectorIdentical {
  bool operator()(const StateVector& a, const StateVector& b) const { return a.identical(b); }
};

template <typename Pred>
StateVector StateVector::restricted(Pred pred) const {
  if (is_dense()) {
    Eigen::VectorXd out = coords();
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (!pred(static_cast<std::int64_t>(i))) out[i] = 0.0;
    }
    return StateVector(std::move(out));
  }
  std::vector<SparseEntry> out;
  for (const auto& e : entries()) {
    if (pred(e.index)) out.push_back(e);
  }
  return StateVector(std::move(out));
}

}  // namespace ghlin
