#ifndef CTOED_KERNEL_HPP
#define CTOED_KERNEL_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ctoed/basis.hpp"
#include "ctoed/design.hpp"
#include "ctoed/error.hpp"
#include "ctoed/linalg.hpp"

namespace ctoed {

enum class KernelKind { brownian, exponential, custom };

inline std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::brownian: return "brownian";
    case KernelKind::exponential: return "exponential";
    case KernelKind::custom: return "custom";
  }
  return "custom";
}

/// u, v and their derivatives; second derivatives may be left empty.
struct KernelFunctions {
  std::function<double(double)> u, v, du, dv;
  std::function<double(double)> ddu, ddv;
};

/// Covariance K(t, t') = u(t) v(t') for t ≤ t', symmetric otherwise.
/// Equivalently K(t, t') = v(t) v(t') min{q(t), q(t')} with q = u / v.
class TriangularKernel {
 public:
  TriangularKernel(KernelFunctions fns, std::string label = "custom")
      : TriangularKernel(std::move(fns), KernelKind::custom, 0.0, std::move(label)) {}

  static TriangularKernel brownian() {
    KernelFunctions f{[](double t) { return t; }, [](double) { return 1.0; },
                      [](double) { return 1.0; }, [](double) { return 0.0; },
                      [](double) { return 0.0; }, [](double) { return 0.0; }};
    return TriangularKernel(std::move(f), KernelKind::brownian, 0.0, "min(t,t')");
  }

  static TriangularKernel exponential(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw InvalidKernel("exponential kernel needs lambda > 0");
    }
    const double l = lambda;
    KernelFunctions f{[l](double t) { return std::exp(l * t); },
                      [l](double t) { return std::exp(-l * t); },
                      [l](double t) { return l * std::exp(l * t); },
                      [l](double t) { return -l * std::exp(-l * t); },
                      [l](double t) { return l * l * std::exp(l * t); },
                      [l](double t) { return l * l * std::exp(-l * t); }};
    return TriangularKernel(std::move(f), KernelKind::exponential, lambda,
                            "exp(-" + trimmed(lambda) + "|t-t'|)");
  }

  KernelKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  const std::string& label() const { return label_; }
  bool has_second_derivative() const { return fns_.ddu && fns_.ddv; }

  double u(double t) const { return fns_.u(t); }
  double v(double t) const { return fns_.v(t); }
  double du(double t) const { return fns_.du(t); }
  double dv(double t) const { return fns_.dv(t); }
  double ddu(double t) const {
    if (!fns_.ddu) throw CapabilityError("kernel " + label_ + " lacks second derivatives");
    return fns_.ddu(t);
  }
  double ddv(double t) const {
    if (!fns_.ddv) throw CapabilityError("kernel " + label_ + " lacks second derivatives");
    return fns_.ddv(t);
  }

  double operator()(double s, double t) const {
    if (kind_ == KernelKind::brownian) return std::min(s, t);
    if (kind_ == KernelKind::exponential) return std::exp(-lambda_ * std::abs(s - t));
    return s <= t ? u(s) * v(t) : u(t) * v(s);
  }

  double q(double t) const {
    if (kind_ == KernelKind::brownian) return t;
    return u(t) / v(t);
  }

  /// u̇v − uv̇ = v² q̇; positive wherever q is strictly increasing.
  double wronskian(double t) const { return du(t) * v(t) - u(t) * dv(t); }

  /// q⁻¹ on [q(a), q(b)]. Analytic for the built-in kernels, monotone
  /// bisection to 1e-12 otherwise.
  double q_inverse(double qt, const Interval& iv) const {
    const double lo = q(iv.a);
    const double hi = q(iv.b);
    const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
    if (!(qt >= lo - slack && qt <= hi + slack)) {
      throw DomainError("point " + std::to_string(qt) + " outside [q(a), q(b)] = [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    if (qt <= lo) return iv.a;
    if (qt >= hi) return iv.b;
    switch (kind_) {
      case KernelKind::brownian: return qt;
      case KernelKind::exponential: return std::log(qt) / (2.0 * lambda_);
      case KernelKind::custom: break;
    }
    double left = iv.a;
    double right = iv.b;
    while (right - left > 1e-12 * std::max(1.0, std::abs(right))) {
      const double mid = 0.5 * (left + right);
      if (q(mid) < qt) {
        left = mid;
      } else {
        right = mid;
      }
    }
    return 0.5 * (left + right);
  }

 private:
  TriangularKernel(KernelFunctions fns, KernelKind kind, double lambda, std::string label)
      : fns_(std::move(fns)), kind_(kind), lambda_(lambda), label_(std::move(label)) {
    if (!fns_.u || !fns_.v || !fns_.du || !fns_.dv) {
      throw InvalidKernel("kernel requires u, v and their derivatives");
    }
  }

  static std::string trimmed(double x) {
    std::string s = std::to_string(x);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  KernelFunctions fns_;
  KernelKind kind_;
  double lambda_;
  std::string label_;
};

inline TriangularKernel brownian() { return TriangularKernel::brownian(); }
inline TriangularKernel exponential(double lambda) { return TriangularKernel::exponential(lambda); }

inline constexpr int kKernelValidationGrid = 1001;

/// Checks on a uniform 1001-point grid that v is positive on [a, b], u is
/// positive on (a, b) and q is strictly increasing.
inline void validate_kernel(const TriangularKernel& k, const Interval& iv) {
  double prev_q = 0.0;
  for (int i = 0; i < kKernelValidationGrid; ++i) {
    const double t = iv.a + iv.length() * i / (kKernelValidationGrid - 1);
    const double vt = k.v(t);
    if (!(vt > 0.0) || !std::isfinite(vt)) {
      throw InvalidKernel("v must be positive on [a, b]; fails at t = " + std::to_string(t));
    }
    const bool interior = i > 0 && i < kKernelValidationGrid - 1;
    if (interior && !(k.u(t) > 0.0)) {
      throw InvalidKernel("u must be positive on (a, b); fails at t = " + std::to_string(t));
    }
    const double qt = k.q(t);
    if (i > 0 && !(qt > prev_q)) {
      throw InvalidKernel("q = u/v must be strictly increasing; fails at t = " +
                          std::to_string(t));
    }
    prev_q = qt;
  }
}

/// Σᵢⱼ = K(tᵢ, tⱼ).
inline Matrix covariance_matrix(const TriangularKernel& k, std::span<const double> points) {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i] > points[i - 1])) {
      throw InvalidDesign("covariance matrix needs strictly increasing points");
    }
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  Matrix sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      sigma(i, j) = k(points[i], points[j]);
      sigma(j, i) = sigma(i, j);
    }
  }
  return sigma;
}

inline Matrix covariance_matrix(const TriangularKernel& k, const Design& d) {
  return covariance_matrix(k, d.points());
}

/// The regression model seen through the time change t̃ = q(t): basis
/// f̃(t̃) = f(q⁻¹(t̃)) / v(q⁻¹(t̃)) on [q(a), q(b)] with Brownian-motion errors.
struct TransformedModel {
  RegressionBasis basis;
  Interval interval;
  Interval original;
  TriangularKernel kernel;

  double back_map(double t_tilde) const { return kernel.q_inverse(t_tilde, original); }
  double forward_map(double t) const { return kernel.q(t); }
};

inline TransformedModel doob_transform(const RegressionBasis& basis, const TriangularKernel& kernel,
                                       const Interval& iv) {
  validate_kernel(kernel, iv);
  if (kernel.kind() == KernelKind::brownian) {
    return TransformedModel{basis, iv, iv, kernel};
  }
  const Interval tilde(kernel.q(iv.a), kernel.q(iv.b));
  const bool second = basis.has_second_derivative() && kernel.has_second_derivative();
  std::vector<BasisFunction> comps;
  for (Eigen::Index c = 0; c < basis.size(); ++c) {
    const BasisFunction& f = basis.component(c);
    BasisFunction g;
    g.label = f.label + "/v";
    g.value = [f, kernel, iv](double tt) {
      const double s = kernel.q_inverse(tt, iv);
      return f.value(s) / kernel.v(s);
    };
    // d f̃/d t̃ = (ḟv − f v̇) / (u̇v − u v̇) evaluated at s = q⁻¹(t̃).
    g.derivative = [f, kernel, iv](double tt) {
      const double s = kernel.q_inverse(tt, iv);
      return (f.derivative(s) * kernel.v(s) - f.value(s) * kernel.dv(s)) / kernel.wronskian(s);
    };
    if (second) {
      g.second_derivative = [f, kernel, iv](double tt) {
        const double s = kernel.q_inverse(tt, iv);
        const double v = kernel.v(s);
        const double w = kernel.wronskian(s);
        const double num = f.derivative(s) * v - f.value(s) * kernel.dv(s);
        const double dnum = f.second_derivative(s) * v - f.value(s) * kernel.ddv(s);
        const double dw = kernel.ddu(s) * v - kernel.u(s) * kernel.ddv(s);
        const double dg = (dnum * w - num * dw) / (w * w);
        return dg * v * v / w;
      };
    }
    comps.push_back(std::move(g));
  }
  return TransformedModel{RegressionBasis(std::move(comps), basis.label() + "/v"), tilde, iv,
                          kernel};
}

/// Applies q⁻¹ pointwise; endpoints of the transformed interval map exactly
/// onto a and b.
inline Design map_design_back(const TransformedModel& model, const Design& design_tilde) {
  std::vector<double> pts;
  pts.reserve(design_tilde.size());
  for (double tt : design_tilde.points()) {
    if (tt == model.interval.a) {
      pts.push_back(model.original.a);
    } else if (tt == model.interval.b) {
      pts.push_back(model.original.b);
    } else {
      pts.push_back(model.back_map(tt));
    }
  }
  return Design(std::move(pts));
}

/// Applies q pointwise; a and b map exactly onto the transformed endpoints.
inline Design map_design_forward(const TransformedModel& model, const Design& design) {
  std::vector<double> pts;
  pts.reserve(design.size());
  for (double t : design.points()) {
    if (t == model.original.a) {
      pts.push_back(model.interval.a);
    } else if (t == model.original.b) {
      pts.push_back(model.interval.b);
    } else {
      pts.push_back(model.forward_map(t));
    }
  }
  return Design(std::move(pts));
}

}  // namespace ctoed

#endif  // CTOED_KERNEL_HPP
