#ifndef CTOED_DESIGN_HPP
#define CTOED_DESIGN_HPP

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctoed/basis.hpp"
#include "ctoed/error.hpp"

namespace ctoed {

/// Ordered observation times t₁ < t₂ < … < tₙ, n ≥ 2.
class Design {
 public:
  explicit Design(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw InvalidDesign("a design needs at least two points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i])) throw InvalidDesign("design point is not finite");
      if (i > 0 && !(points_[i] > points_[i - 1])) {
        throw InvalidDesign("design points must be strictly increasing (index " +
                            std::to_string(i) + ")");
      }
    }
  }

  Design(std::initializer_list<double> points) : Design(std::vector<double>(points)) {}

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  std::span<const double> points() const { return points_; }
  const std::vector<double>& values() const { return points_; }

  double max_spacing() const {
    double h = 0.0;
    for (std::size_t i = 1; i < points_.size(); ++i) h = std::max(h, points_[i] - points_[i - 1]);
    return h;
  }

  friend bool operator==(const Design&, const Design&) = default;

 private:
  std::vector<double> points_;
};

/// Throws unless the design starts at a, ends at b and has spacing at least
/// 1e-9·(b − a).
inline void require_spans(const Design& d, const Interval& iv) {
  const double scale = std::max({1.0, std::abs(iv.a), std::abs(iv.b)});
  if (std::abs(d.front() - iv.a) > 1e-12 * scale || std::abs(d.back() - iv.b) > 1e-12 * scale) {
    throw InvalidDesign("design must start at a and end at b");
  }
  const double min_gap = 1e-9 * iv.length();
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] - d[i - 1] < min_gap) {
      throw InvalidDesign("design points closer than 1e-9·(b − a)");
    }
  }
}

/// tᵢ = a + (i − 1)/(n − 1)·(b − a), endpoints exact.
inline Design equidistant_design(int n, const Interval& iv) {
  if (n < 2) throw InvalidDesign("equidistant design needs n >= 2");
  std::vector<double> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pts[i] = iv.a + (static_cast<double>(i) / (n - 1)) * iv.length();
  pts.front() = iv.a;
  pts.back() = iv.b;
  return Design(std::move(pts));
}

}  // namespace ctoed

#endif  // CTOED_DESIGN_HPP
