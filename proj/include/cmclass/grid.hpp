#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cmclass/error.hpp"

namespace cmclass {

/// Grids are dimension-generic up to this many axes.
inline constexpr int kMaxDim = 8;

using CellIndex = std::size_t;
using CellCoord = std::array<std::int64_t, kMaxDim>;

/// Uniform axis-aligned cell grid spanning the hold-all box. Cell centers sit at
/// origin + spacing * coord; the last axis varies fastest in the linear index.
class GridSpec {
 public:
  GridSpec() = default;

  GridSpec(std::vector<std::int64_t> cells_per_axis, double spacing, std::vector<double> origin)
      : extents_(std::move(cells_per_axis)), spacing_(spacing), origin_(std::move(origin)) {
    const auto k = extents_.size();
    require(k >= 2 && k <= static_cast<std::size_t>(kMaxDim), ErrorCode::InvalidGrid,
            "dimension must be in [2, " + std::to_string(kMaxDim) + "], got " + std::to_string(k));
    require(origin_.size() == k, ErrorCode::InvalidGrid, "origin length does not match dimension");
    require(std::isfinite(spacing_) && spacing_ > 0.0, ErrorCode::InvalidGrid, "spacing must be positive");
    for (double o : origin_) require(std::isfinite(o), ErrorCode::InvalidGrid, "origin must be finite");
    strides_.assign(k, 1);
    std::size_t total = 1;
    for (std::size_t a = k; a-- > 0;) {
      require(extents_[a] >= 4, ErrorCode::InvalidGrid,
              "axis " + std::to_string(a) + " has " + std::to_string(extents_[a]) + " cells, need >= 4");
      strides_[a] = total;
      const auto n = static_cast<std::size_t>(extents_[a]);
      require(total <= std::numeric_limits<std::size_t>::max() / n / 2, ErrorCode::InvalidGrid,
              "total cell count overflows");
      total *= n;
    }
    size_ = total;
  }

  /// n^k cells with spacing h and the same origin coordinate on every axis.
  static GridSpec cube(int dim, std::int64_t n, double h, double origin = 0.0) {
    return GridSpec(std::vector<std::int64_t>(static_cast<std::size_t>(dim), n), h,
                    std::vector<double>(static_cast<std::size_t>(dim), origin));
  }

  int dim() const noexcept { return static_cast<int>(extents_.size()); }
  const std::vector<std::int64_t>& extents() const noexcept { return extents_; }
  std::int64_t extent(int axis) const { return extents_[static_cast<std::size_t>(axis)]; }
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
  double spacing() const noexcept { return spacing_; }
  const std::vector<double>& origin() const noexcept { return origin_; }
  std::size_t size() const noexcept { return size_; }

  CellCoord coords(CellIndex idx) const {
    CellCoord c{};
    for (int a = 0; a < dim(); ++a) {
      const auto s = strides_[static_cast<std::size_t>(a)];
      c[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(idx / s);
      idx %= s;
    }
    return c;
  }

  bool in_range(const CellCoord& c) const {
    for (int a = 0; a < dim(); ++a)
      if (c[static_cast<std::size_t>(a)] < 0 || c[static_cast<std::size_t>(a)] >= extent(a)) return false;
    return true;
  }

  CellIndex index(const CellCoord& c) const {
    CellIndex idx = 0;
    for (int a = 0; a < dim(); ++a) idx += static_cast<std::size_t>(c[static_cast<std::size_t>(a)]) * stride(a);
    return idx;
  }

  CellIndex index(std::initializer_list<std::int64_t> c) const {
    require(static_cast<int>(c.size()) == dim(), ErrorCode::InvalidArgument, "coordinate arity mismatch");
    CellCoord cc{};
    std::copy(c.begin(), c.end(), cc.begin());
    require(in_range(cc), ErrorCode::InvalidArgument, "coordinate out of range");
    return index(cc);
  }

  /// True for cells on the outermost one-cell ring.
  bool on_margin(CellIndex idx) const {
    const auto c = coords(idx);
    for (int a = 0; a < dim(); ++a) {
      const auto v = c[static_cast<std::size_t>(a)];
      if (v == 0 || v == extent(a) - 1) return true;
    }
    return false;
  }

  /// Physical position of a cell center along one axis.
  double center(CellIndex idx, int axis) const {
    return origin_[static_cast<std::size_t>(axis)] +
           spacing_ * static_cast<double>(coords(idx)[static_cast<std::size_t>(axis)]);
  }

  std::vector<double> center(CellIndex idx) const {
    const auto c = coords(idx);
    std::vector<double> p(extents_.size());
    for (int a = 0; a < dim(); ++a)
      p[static_cast<std::size_t>(a)] =
          origin_[static_cast<std::size_t>(a)] + spacing_ * static_cast<double>(c[static_cast<std::size_t>(a)]);
    return p;
  }

  /// Squared center-to-center distance in units of cells.
  std::int64_t squared_steps(CellIndex a, CellIndex b) const {
    const auto ca = coords(a);
    const auto cb = coords(b);
    std::int64_t s = 0;
    for (int i = 0; i < dim(); ++i) {
      const auto d = ca[static_cast<std::size_t>(i)] - cb[static_cast<std::size_t>(i)];
      s += d * d;
    }
    return s;
  }

  /// Converts a squared step count to a physical length. Every distance in the
  /// library goes through here so that equal step counts give bitwise-equal lengths.
  double length(std::int64_t squared_steps) const {
    return spacing_ * std::sqrt(static_cast<double>(squared_steps));
  }

  double distance(CellIndex a, CellIndex b) const { return length(squared_steps(a, b)); }

  std::string describe(CellIndex idx) const {
    const auto c = coords(idx);
    std::string s = "(";
    for (int a = 0; a < dim(); ++a) {
      if (a) s += ", ";
      s += std::to_string(c[static_cast<std::size_t>(a)]);
    }
    return s + ")";
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.extents_ == b.extents_ && a.spacing_ == b.spacing_ && a.origin_ == b.origin_;
  }

 private:
  std::vector<std::int64_t> extents_;
  std::vector<std::size_t> strides_;
  double spacing_ = 1.0;
  std::vector<double> origin_;
  std::size_t size_ = 0;
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
  require(a == b, ErrorCode::GridMismatch, "inputs live on different grids");
}

/// Open set as a boolean cell field; true means the cell center lies in the set.
/// The outermost ring is always false (compact containment in the box).
class DomainMask {
 public:
  DomainMask() = default;

  explicit DomainMask(GridSpec grid) : grid_(std::move(grid)), inside_(grid_.size(), 0) {}

  DomainMask(GridSpec grid, std::vector<std::uint8_t> inside) : grid_(std::move(grid)), inside_(std::move(inside)) {
    require(inside_.size() == grid_.size(), ErrorCode::InvalidArgument, "mask size does not match grid");
    for (CellIndex i = 0; i < inside_.size(); ++i) {
      if (inside_[i] > 1) inside_[i] = 1;
      if (inside_[i] && grid_.on_margin(i))
        fail(ErrorCode::MarginViolation, "cell " + grid_.describe(i) + " on the outer ring is inside the domain");
    }
  }

  /// Builds a mask from a predicate on cell-center positions; margin cells are forced false.
  template <class Pred>
  static DomainMask from_predicate(const GridSpec& grid, Pred&& pred) {
    std::vector<std::uint8_t> in(grid.size(), 0);
    for (CellIndex i = 0; i < grid.size(); ++i)
      if (!grid.on_margin(i) && pred(grid.center(i))) in[i] = 1;
    return DomainMask(grid, std::move(in));
  }

  const GridSpec& grid() const noexcept { return grid_; }
  bool operator[](CellIndex i) const { return inside_[i] != 0; }
  std::span<const std::uint8_t> cells() const noexcept { return inside_; }
  std::size_t size() const noexcept { return inside_.size(); }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), std::uint8_t{1}));
  }
  bool empty() const { return count() == 0; }

  std::vector<CellIndex> true_cells() const {
    std::vector<CellIndex> out;
    for (CellIndex i = 0; i < inside_.size(); ++i)
      if (inside_[i]) out.push_back(i);
    return out;
  }

  /// Returns a copy with one cell changed; throws MarginViolation on the outer ring.
  DomainMask with(CellIndex i, bool value) const {
    auto in = inside_;
    in[i] = value ? 1 : 0;
    return DomainMask(grid_, std::move(in));
  }

  friend bool operator==(const DomainMask& a, const DomainMask& b) {
    return a.grid_ == b.grid_ && a.inside_ == b.inside_;
  }

 private:
  GridSpec grid_;
  std::vector<std::uint8_t> inside_;
};

/// Nonempty finite set of cells (sorted, deduplicated).
class CompactSet {
 public:
  CompactSet() = default;

  CompactSet(GridSpec grid, std::vector<CellIndex> cells) : grid_(std::move(grid)), cells_(std::move(cells)) {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
    require(!cells_.empty(), ErrorCode::EmptySet, "compact set has no cells");
    require(cells_.back() < grid_.size(), ErrorCode::InvalidArgument, "cell index out of range");
  }

  static CompactSet from_flags(const GridSpec& grid, std::span<const std::uint8_t> flags) {
    std::vector<CellIndex> cells;
    for (CellIndex i = 0; i < flags.size(); ++i)
      if (flags[i]) cells.push_back(i);
    return CompactSet(grid, std::move(cells));
  }

  /// Closure proxy of a domain: its true cells.
  static CompactSet of_mask(const DomainMask& mask) { return from_flags(mask.grid(), mask.cells()); }

  const GridSpec& grid() const noexcept { return grid_; }
  const std::vector<CellIndex>& cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool contains(CellIndex i) const { return std::binary_search(cells_.begin(), cells_.end(), i); }

  std::vector<std::uint8_t> flags() const {
    std::vector<std::uint8_t> f(grid_.size(), 0);
    for (auto c : cells_) f[c] = 1;
    return f;
  }

  friend bool operator==(const CompactSet& a, const CompactSet& b) {
    return a.grid_ == b.grid_ && a.cells_ == b.cells_;
  }

 private:
  GridSpec grid_;
  std::vector<CellIndex> cells_;
};

/// Per-cell Euclidean distance to a feature set, kept both as exact squared
/// step counts and as physical lengths.
class DistanceField {
 public:
  static constexpr std::int64_t kInfinite = std::numeric_limits<std::int64_t>::max();

  DistanceField() = default;
  DistanceField(GridSpec grid, std::vector<std::int64_t> squared) : grid_(std::move(grid)), squared_(std::move(squared)) {
    value_.resize(squared_.size());
    for (std::size_t i = 0; i < squared_.size(); ++i)
      value_[i] = squared_[i] == kInfinite ? std::numeric_limits<double>::infinity() : grid_.length(squared_[i]);
  }

  const GridSpec& grid() const noexcept { return grid_; }
  double operator[](CellIndex i) const { return value_[i]; }
  std::int64_t squared_steps(CellIndex i) const { return squared_[i]; }
  std::span<const double> values() const noexcept { return value_; }
  std::span<const std::int64_t> squared() const noexcept { return squared_; }

  /// Largest value and its smallest-index argmax.
  std::pair<CellIndex, double> argmax() const {
    CellIndex best = 0;
    for (CellIndex i = 1; i < value_.size(); ++i)
      if (squared_[i] > squared_[best]) best = i;
    return {best, value_[best]};
  }

 private:
  GridSpec grid_;
  std::vector<std::int64_t> squared_;
  std::vector<double> value_;
};

}  // namespace cmclass
