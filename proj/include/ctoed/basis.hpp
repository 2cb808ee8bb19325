#ifndef CTOED_BASIS_HPP
#define CTOED_BASIS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctoed/error.hpp"
#include "ctoed/linalg.hpp"
#include "ctoed/quadrature.hpp"

namespace ctoed {

/// Compact design interval [a, b] with a < b.
struct Interval {
  double a;
  double b;

  Interval(double left, double right) : a(left), b(right) {
    if (!(std::isfinite(a) && std::isfinite(b)) || !(a < b)) {
      throw InvalidInput("interval requires finite a < b, got [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");
    }
  }

  double length() const { return b - a; }
  bool contains(double t) const { return a <= t && t <= b; }
};

/// One scalar regression function with its analytic derivatives. The second
/// derivative is optional; operations that need it report a CapabilityError
/// (or fall back to finite differences where documented).
struct BasisFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> second_derivative;
  std::string label;
};

/// The vector f = (f₁, …, f_m)ᵀ of regression functions together with ḟ
/// (and f̈ when available). Immutable after construction.
class RegressionBasis {
 public:
  RegressionBasis(std::vector<BasisFunction> components, std::string label = {})
      : components_(std::move(components)), label_(std::move(label)) {
    if (components_.empty()) throw InvalidBasis("basis must have at least one component");
    for (const auto& c : components_) {
      if (!c.value || !c.derivative) {
        throw InvalidBasis("basis component '" + c.label + "' lacks a value or derivative");
      }
    }
    if (label_.empty()) {
      label_ = "(";
      for (std::size_t i = 0; i < components_.size(); ++i) {
        label_ += (i ? ", " : "") + components_[i].label;
      }
      label_ += ")";
    }
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(components_.size()); }
  const std::string& label() const { return label_; }
  const BasisFunction& component(Eigen::Index k) const { return components_.at(k); }
  const std::vector<BasisFunction>& components() const { return components_; }

  Vector value(double t) const {
    Vector out(size());
    for (Eigen::Index k = 0; k < size(); ++k) out(k) = components_[k].value(t);
    return out;
  }

  Vector derivative(double t) const {
    Vector out(size());
    for (Eigen::Index k = 0; k < size(); ++k) out(k) = components_[k].derivative(t);
    return out;
  }

  bool has_second_derivative() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const BasisFunction& c) { return static_cast<bool>(c.second_derivative); });
  }

  Vector second_derivative(double t) const {
    if (!has_second_derivative()) {
      throw CapabilityError("basis " + label_ + " does not provide second derivatives");
    }
    Vector out(size());
    for (Eigen::Index k = 0; k < size(); ++k) out(k) = components_[k].second_derivative(t);
    return out;
  }

  /// Components selected by index, in the given order.
  RegressionBasis subset(std::span<const Eigen::Index> indices) const {
    std::vector<BasisFunction> picked;
    for (auto k : indices) picked.push_back(components_.at(k));
    return RegressionBasis(std::move(picked));
  }

 private:
  std::vector<BasisFunction> components_;
  std::string label_;
};

namespace detail {

inline std::string power_label(int p) {
  if (p == 0) return "1";
  if (p == 1) return "t";
  return "t^" + std::to_string(p);
}

inline std::string offset_label(const std::string& base, double c) {
  if (c == 0.0) return base;
  std::string num = std::to_string(std::abs(c));
  num.erase(num.find_last_not_of('0') + 1);
  if (!num.empty() && num.back() == '.') num.pop_back();
  return base + (c < 0 ? "-" : "+") + num;
}

}  // namespace detail

/// f(t) = (t^{p₁}, …, t^{p_m})ᵀ.
inline RegressionBasis polynomial_basis(std::span<const int> powers) {
  if (powers.empty()) throw InvalidBasis("polynomial basis needs at least one power");
  std::set<int> seen;
  std::vector<BasisFunction> comps;
  for (int p : powers) {
    if (p < 0) throw InvalidBasis("polynomial powers must be non-negative");
    if (!seen.insert(p).second) {
      throw InvalidBasis("duplicate power " + std::to_string(p) + " in polynomial basis");
    }
    BasisFunction c;
    c.label = detail::power_label(p);
    c.value = [p](double t) { return p == 0 ? 1.0 : std::pow(t, p); };
    c.derivative = [p](double t) { return p == 0 ? 0.0 : p * std::pow(t, p - 1); };
    c.second_derivative = [p](double t) {
      return p < 2 ? 0.0 : static_cast<double>(p) * (p - 1) * std::pow(t, p - 2);
    };
    comps.push_back(std::move(c));
  }
  return RegressionBasis(std::move(comps));
}

inline RegressionBasis polynomial_basis(std::initializer_list<int> powers) {
  return polynomial_basis(std::span<const int>(powers.begin(), powers.size()));
}

/// (sin k t, cos k t) for each frequency k, in the given order.
inline RegressionBasis trig_basis(std::span<const int> frequencies) {
  if (frequencies.empty()) throw InvalidBasis("trigonometric basis needs at least one frequency");
  std::set<int> seen;
  std::vector<BasisFunction> comps;
  for (int k : frequencies) {
    if (k <= 0) throw InvalidBasis("trigonometric frequencies must be positive");
    if (!seen.insert(k).second) {
      throw InvalidBasis("duplicate frequency " + std::to_string(k));
    }
    const double w = k;
    const std::string arg = (k == 1 ? "" : std::to_string(k)) + "t";
    comps.push_back({[w](double t) { return std::sin(w * t); },
                     [w](double t) { return w * std::cos(w * t); },
                     [w](double t) { return -w * w * std::sin(w * t); }, "sin " + arg});
    comps.push_back({[w](double t) { return std::cos(w * t); },
                     [w](double t) { return -w * std::sin(w * t); },
                     [w](double t) { return -w * w * std::cos(w * t); }, "cos " + arg});
  }
  return RegressionBasis(std::move(comps));
}

inline RegressionBasis trig_basis(std::initializer_list<int> frequencies) {
  return trig_basis(std::span<const int>(frequencies.begin(), frequencies.size()));
}

/// f(t) + c componentwise; `offsets` has one entry per component.
inline RegressionBasis affine_shift(const RegressionBasis& base, std::span<const double> offsets) {
  if (static_cast<Eigen::Index>(offsets.size()) != base.size()) {
    throw InvalidBasis("affine shift needs one offset per component");
  }
  std::vector<BasisFunction> comps;
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    BasisFunction c = base.component(k);
    const double off = offsets[k];
    c.value = [v = c.value, off](double t) { return v(t) + off; };
    c.label = detail::offset_label(c.label, off);
    comps.push_back(std::move(c));
  }
  return RegressionBasis(std::move(comps));
}

inline RegressionBasis affine_shift(const RegressionBasis& base, double offset) {
  std::vector<double> offs(static_cast<std::size_t>(base.size()), offset);
  return affine_shift(base, offs);
}

/// M = ∫_a^b ḟ(t) ḟᵀ(t) dt.
inline Matrix derivative_gram(const RegressionBasis& basis, double a, double b) {
  return quadrature::integrate_outer([&](double t) { return basis.derivative(t); }, basis.size(),
                                     a, b);
}

inline Matrix derivative_gram(const RegressionBasis& basis, const Interval& iv) {
  return derivative_gram(basis, iv.a, iv.b);
}

struct GramRank {
  int rank = 0;
  bool has_intercept = false;
  /// False when rank < m − 1: the components (or their derivatives) are
  /// linearly dependent beyond a single constant direction.
  bool linearly_independent = true;
  Matrix gram;
};

/// Numerical rank of M = ∫ḟḟᵀ. A rank deficit of exactly one means the
/// constant function lies in the span of f; larger deficits are reported,
/// never repaired.
inline GramRank gram_rank(const RegressionBasis& basis, const Interval& interval) {
  GramRank out;
  out.gram = derivative_gram(basis, interval);
  out.rank = numerical_rank(out.gram, 1e-10);
  const auto m = static_cast<int>(basis.size());
  out.has_intercept = out.rank < m;
  out.linearly_independent = out.rank >= m - 1;
  return out;
}

}  // namespace ctoed

#endif  // CTOED_BASIS_HPP
