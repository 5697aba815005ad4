#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace sf {

/// Half-open integer interval [lb, ub).
struct Interval {
  int64_t lb = 0;
  int64_t ub = 0;

  int64_t extent() const { return ub - lb; }
  bool empty() const { return ub <= lb; }
  bool contains(int64_t v) const { return v >= lb && v < ub; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Per-dimension box with inclusive lower and exclusive upper bounds. Used for
/// stencil temp types, apply iteration spaces and rank-local regions.
class Bounds {
 public:
  Bounds() = default;
  explicit Bounds(std::vector<Interval> dims) : dims_(std::move(dims)) {}

  static Bounds fromExtents(const std::vector<int64_t>& extents) {
    std::vector<Interval> dims;
    dims.reserve(extents.size());
    for (int64_t e : extents) dims.push_back({0, e});
    return Bounds(std::move(dims));
  }

  size_t rank() const { return dims_.size(); }
  const Interval& operator[](size_t d) const { return dims_[d]; }
  Interval& operator[](size_t d) { return dims_[d]; }
  const std::vector<Interval>& dims() const { return dims_; }

  int64_t lb(size_t d) const { return dims_[d].lb; }
  int64_t ub(size_t d) const { return dims_[d].ub; }
  int64_t extent(size_t d) const { return dims_[d].extent(); }

  bool empty() const {
    return std::any_of(dims_.begin(), dims_.end(), [](const Interval& i) { return i.empty(); });
  }

  /// Number of points; zero when any dimension is empty. A rank-0 box has one.
  int64_t cells() const {
    int64_t n = 1;
    for (const auto& i : dims_) n *= std::max<int64_t>(0, i.extent());
    return n;
  }

  bool contains(const std::vector<int64_t>& point) const {
    if (point.size() != dims_.size()) return false;
    for (size_t d = 0; d < dims_.size(); ++d)
      if (!dims_[d].contains(point[d])) return false;
    return true;
  }

  bool containsBox(const Bounds& other) const {
    if (other.rank() != rank()) return false;
    if (other.empty()) return true;
    for (size_t d = 0; d < dims_.size(); ++d)
      if (other.lb(d) < lb(d) || other.ub(d) > ub(d)) return false;
    return true;
  }

  Bounds intersect(const Bounds& other) const {
    Bounds r = *this;
    for (size_t d = 0; d < dims_.size(); ++d) {
      r[d].lb = std::max(lb(d), other.lb(d));
      r[d].ub = std::min(ub(d), other.ub(d));
      if (r[d].ub < r[d].lb) r[d].ub = r[d].lb;
    }
    return r;
  }

  /// Smallest box covering both; an empty operand is ignored.
  Bounds hull(const Bounds& other) const {
    if (empty()) return other;
    if (other.empty()) return *this;
    Bounds r = *this;
    for (size_t d = 0; d < dims_.size(); ++d) {
      r[d].lb = std::min(lb(d), other.lb(d));
      r[d].ub = std::max(ub(d), other.ub(d));
    }
    return r;
  }

  Bounds shifted(const std::vector<int64_t>& offset) const {
    Bounds r = *this;
    for (size_t d = 0; d < dims_.size(); ++d) {
      r[d].lb += offset[d];
      r[d].ub += offset[d];
    }
    return r;
  }

  /// `[lb,ub]x[lb,ub]` rendering; the upper value is exclusive.
  std::string str() const {
    std::string s;
    for (size_t d = 0; d < dims_.size(); ++d) {
      if (d) s += "x";
      s += "[" + std::to_string(dims_[d].lb) + "," + std::to_string(dims_[d].ub) + "]";
    }
    return s;
  }

  friend bool operator==(const Bounds&, const Bounds&) = default;

 private:
  std::vector<Interval> dims_;
};

/// Visits every point of `box` with dimension 0 varying fastest.
template <typename Fn>
void forEachPoint(const Bounds& box, Fn&& fn) {
  if (box.empty()) return;
  std::vector<int64_t> p(box.rank());
  for (size_t d = 0; d < box.rank(); ++d) p[d] = box.lb(d);
  while (true) {
    fn(static_cast<const std::vector<int64_t>&>(p));
    size_t d = 0;
    for (; d < box.rank(); ++d) {
      if (++p[d] < box.ub(d)) break;
      p[d] = box.lb(d);
    }
    if (d == box.rank()) return;
  }
}

}  // namespace sf
