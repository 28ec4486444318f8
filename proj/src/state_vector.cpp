#include "ghlin/state_vector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "ghlin/errors.hpp"

namespace ghlin {

NormKind NormKind::lp(double p) {
  if (!std::isfinite(p) || p < 1.0) {
    throw PreconditionError("l^p norm requires finite p >= 1, got " + std::to_string(p));
  }
  return NormKind(Tag::Lp, p);
}

StateVector StateVector::dense(Eigen::VectorXd coords) { return StateVector(std::move(coords)); }

StateVector StateVector::dense_zero(std::size_t n) {
  return StateVector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
}

StateVector StateVector::sparse(const std::map<std::int64_t, double>& coords) {
  std::vector<SparseEntry> out;
  out.reserve(coords.size());
  for (const auto& [i, v] : coords) {
    if (v != 0.0) out.push_back({i, v});
  }
  return StateVector(std::move(out));
}

StateVector StateVector::sparse(std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
  std::vector<SparseEntry> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.empty() && out.back().index == e.index) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  std::erase_if(out, [](const SparseEntry& e) { return e.value == 0.0; });
  return StateVector(std::move(out));
}

StateVector StateVector::zero_like(const StateVector& v) {
  if (v.is_dense()) return dense_zero(v.dimension());
  return StateVector();
}

std::size_t StateVector::dimension() const {
  return is_dense() ? static_cast<std::size_t>(coords().size()) : 0;
}

const Eigen::VectorXd& StateVector::coords() const {
  if (!is_dense()) throw PreconditionError("coords() called on a sparse StateVector");
  return std::get<Eigen::VectorXd>(data_);
}

std::span<const SparseEntry> StateVector::entries() const {
  if (is_dense()) throw PreconditionError("entries() called on a dense StateVector");
  return std::get<std::vector<SparseEntry>>(data_);
}

double StateVector::at(std::int64_t i) const {
  if (is_dense()) {
    const auto& c = coords();
    return (i >= 0 && i < c.size()) ? c[i] : 0.0;
  }
  auto e = entries();
  auto it = std::lower_bound(e.begin(), e.end(), i,
                             [](const SparseEntry& s, std::int64_t idx) { return s.index < idx; });
  return (it != e.end() && it->index == i) ? it->value : 0.0;
}

std::size_t StateVector::support_size() const {
  return is_dense() ? dimension() : entries().size();
}

bool StateVector::is_zero() const {
  if (is_dense()) return (coords().array() == 0.0).all();
  return entries().empty();
}

bool StateVector::identical(const StateVector& other) const {
  if (is_dense() != other.is_dense()) return false;
  if (is_dense()) {
    const auto& a = coords();
    const auto& b = other.coords();
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    }
    return true;
  }
  auto a = entries();
  auto b = other.entries();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].index != b[i].index ||
        std::bit_cast<std::uint64_t>(a[i].value) != std::bit_cast<std::uint64_t>(b[i].value)) {
      return false;
    }
  }
  return true;
}

namespace {
inline void hash_mix(std::size_t& seed, std::uint64_t v) {
  seed ^= std::hash<std::uint64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}
}  // namespace

std::size_t StateVector::hash() const {
  std::size_t seed = is_dense() ? 1 : 2;
  if (is_dense()) {
    for (double v : coords()) hash_mix(seed, std::bit_cast<std::uint64_t>(v));
  } else {
    for (const auto& e : entries()) {
      hash_mix(seed, static_cast<std::uint64_t>(e.index));
      hash_mix(seed, std::bit_cast<std::uint64_t>(e.value));
    }
  }
  return seed;
}

void require_compatible(const StateVector& x, const StateVector& y) {
  if (x.is_dense() != y.is_dense()) {
    throw PreconditionError("StateVector backend mismatch (dense vs sparse)");
  }
  if (x.is_dense() && x.dimension() != y.dimension()) {
    throw PreconditionError("StateVector dimension mismatch: " + std::to_string(x.dimension()) +
                            " vs " + std::to_string(y.dimension()));
  }
}

StateVector axpy(double a, const StateVector& x, const StateVector& y) {
  require_compatible(x, y);
  if (x.is_dense()) return StateVector(Eigen::VectorXd(a * x.coords() + y.coords()));
  if (a == 0.0) return y;

  auto xs = x.entries();
  auto ys = y.entries();
  std::vector<SparseEntry> out;
  out.reserve(xs.size() + ys.size());
  std::size_t i = 0, j = 0;
  auto push = [&out](std::int64_t idx, double v) {
    if (v != 0.0) out.push_back({idx, v});
  };
  while (i < xs.size() && j < ys.size()) {
    if (xs[i].index < ys[j].index) {
      push(xs[i].index, a * xs[i].value);
      ++i;
    } else if (ys[j].index < xs[i].index) {
      push(ys[j].index, ys[j].value);
      ++j;
    } else {
      push(xs[i].index, a * xs[i].value + ys[j].value);
      ++i;
      ++j;
    }
  }
  for (; i < xs.size(); ++i) push(xs[i].index, a * xs[i].value);
  for (; j < ys.size(); ++j) push(ys[j].index, ys[j].value);
  return StateVector(std::move(out));
}

namespace {

template <typename Range>
double norm_of_values(const Range& values, NormKind kind) {
  if (kind.is_sup()) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  const double p = kind.p();
  if (p == 1.0) {
    double s = 0.0;
    for (double v : values) s += std::abs(v);
    return s;
  }
  // Scale by the largest magnitude so that |v|^p neither overflows nor underflows.
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : values) s += std::pow(std::abs(v) / scale, p);
  return scale * std::pow(s, 1.0 / p);
}

}  // namespace

double norm(const StateVector& v, NormKind kind) {
  if (v.is_dense()) {
    const auto& c = v.coords();
    return norm_of_values(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())),
                          kind);
  }
  std::vector<double> values;
  values.reserve(v.entries().size());
  for (const auto& e : v.entries()) values.push_back(e.value);
  return norm_of_values(values, kind);
}

StateVector& StateVector::operator+=(const StateVector& other) {
  *this = axpy(1.0, other, *this);
  return *this;
}

StateVector& StateVector::operator-=(const StateVector& other) {
  *this = axpy(-1.0, other, *this);
  return *this;
}

StateVector& StateVector::operator*=(double a) {
  if (is_dense()) {
    std::get<Eigen::VectorXd>(data_) *= a;
    return *this;
  }
  auto& e = sparse_entries();
  for (auto& s : e) s.value *= a;
  std::erase_if(e, [](const SparseEntry& s) { return s.value == 0.0; });
  return *this;
}

StateVector operator+(const StateVector& x, const StateVector& y) { return axpy(1.0, x, y); }
StateVector operator-(const StateVector& x, const StateVector& y) { return axpy(-1.0, y, x); }
StateVector operator-(const StateVector& x) {
  StateVector r = x;
  r *= -1.0;
  return r;
}
StateVector operator*(double a, const StateVector& x) {
  StateVector r = x;
  r *= a;
  return r;
}

}  // namespace ghlin
