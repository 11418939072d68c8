#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "cmclass/grid.hpp"

namespace cmclass {

/// Face: 2k neighbors. FaceVertex: all 3^k - 1 neighbors.
enum class Adjacency { Face, FaceVertex };

/// Neighbor offsets for one grid and adjacency, with a bounds-checked visitor.
class Neighborhood {
 public:
  Neighborhood(const GridSpec& grid, Adjacency adjacency) : grid_(grid) {
    const int k = grid.dim();
    std::int64_t combos = 1;
    for (int a = 0; a < k; ++a) combos *= 3;
    for (std::int64_t code = 0; code < combos; ++code) {
      CellCoord off{};
      std::int64_t rest = code;
      int nonzero = 0;
      std::int64_t linear = 0;
      for (int a = k - 1; a >= 0; --a) {
        off[static_cast<std::size_t>(a)] = rest % 3 - 1;
        rest /= 3;
        if (off[static_cast<std::size_t>(a)] != 0) ++nonzero;
        linear += off[static_cast<std::size_t>(a)] * static_cast<std::int64_t>(grid.stride(a));
      }
      if (nonzero == 0) continue;
      if (adjacency == Adjacency::Face && nonzero != 1) continue;
      offsets_.push_back(off);
      linear_.push_back(linear);
    }
  }

  /// Calls fn(neighbor) for each in-range neighbor, in increasing linear-offset order.
  template <class Fn>
  void for_each(CellIndex idx, Fn&& fn) const {
    const auto c = grid_.coords(idx);
    bool interior = true;
    for (int a = 0; a < grid_.dim(); ++a) {
      const auto v = c[static_cast<std::size_t>(a)];
      if (v == 0 || v == grid_.extent(a) - 1) {
        interior = false;
        break;
      }
    }
    for (std::size_t n = 0; n < offsets_.size(); ++n) {
      if (!interior) {
        bool ok = true;
        for (int a = 0; a < grid_.dim() && ok; ++a) {
          const auto v = c[static_cast<std::size_t>(a)] + offsets_[n][static_cast<std::size_t>(a)];
          ok = v >= 0 && v < grid_.extent(a);
        }
        if (!ok) continue;
      }
      fn(static_cast<CellIndex>(static_cast<std::int64_t>(idx) + linear_[n]));
    }
  }

  std::size_t size() const noexcept { return offsets_.size(); }

 private:
  GridSpec grid_;
  std::vector<CellCoord> offsets_;
  std::vector<std::int64_t> linear_;
};

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Returns the surviving root.
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

  bool same(std::size_t a, std::size_t b) { return find(a) == find(b); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

struct Labeling {
  std::vector<int> label;  ///< component id per cell, -1 outside the set
  int count = 0;
};

/// Component labels are dense from 0, ordered by the smallest cell index they contain.
inline Labeling connected_components(const GridSpec& grid, std::span<const std::uint8_t> member, Adjacency adjacency) {
  require(member.size() == grid.size(), ErrorCode::InvalidArgument, "membership size does not match grid");
  Labeling out;
  out.label.assign(grid.size(), -1);
  const Neighborhood nb(grid, adjacency);
  std::vector<CellIndex> queue;
  for (CellIndex start = 0; start < grid.size(); ++start) {
    if (!member[start] || out.label[start] >= 0) continue;
    const int id = out.count++;
    out.label[start] = id;
    queue.assign(1, start);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      nb.for_each(queue[head], [&](CellIndex n) {
        if (member[n] && out.label[n] < 0) {
          out.label[n] = id;
          queue.push_back(n);
        }
      });
    }
  }
  return out;
}

inline Labeling connected_components(const DomainMask& mask, Adjacency adjacency) {
  return connected_components(mask.grid(), mask.cells(), adjacency);
}

inline Labeling connected_components(const CompactSet& set, Adjacency adjacency) {
  const auto flags = set.flags();
  return connected_components(set.grid(), flags, adjacency);
}

}  // namespace cmclass
