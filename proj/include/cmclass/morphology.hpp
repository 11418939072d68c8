#pragma once

#include <cmath>
#include <vector>

#include "cmclass/connectivity.hpp"
#include "cmclass/edt.hpp"
#include "cmclass/grid.hpp"

namespace cmclass {

/// Cells whose distance to the complement is at least r.
inline DomainMask erode(const DistanceField& dist, double r) {
  require(std::isfinite(r) && r > 0.0, ErrorCode::InvalidArgument, "erosion radius must be positive");
  std::vector<std::uint8_t> in(dist.grid().size(), 0);
  for (CellIndex i = 0; i < in.size(); ++i) in[i] = dist[i] >= r ? 1 : 0;
  return DomainMask(dist.grid(), std::move(in));
}

inline DomainMask erode(const DomainMask& mask, double r) { return erode(edt(mask), r); }

/// False cells with at least one true face neighbor.
inline CompactSet boundary_cells(const DomainMask& mask) {
  require(!mask.empty(), ErrorCode::EmptyDomain, "mask has no interior cell");
  const Neighborhood nb(mask.grid(), Adjacency::Face);
  std::vector<CellIndex> out;
  for (CellIndex i = 0; i < mask.size(); ++i) {
    if (mask[i]) continue;
    bool touches = false;
    nb.for_each(i, [&](CellIndex n) { touches = touches || mask[n]; });
    if (touches) out.push_back(i);
  }
  return CompactSet(mask.grid(), std::move(out));
}

/// All false cells: the hold-all box minus the open set.
inline CompactSet closed_complement(const DomainMask& mask) {
  std::vector<CellIndex> out;
  for (CellIndex i = 0; i < mask.size(); ++i)
    if (!mask[i]) out.push_back(i);
  return CompactSet(mask.grid(), std::move(out));
}

/// Cells within strict distance r of the given cells (union of open balls),
/// restricted to the interior of the box.
inline DomainMask open_ball_union(const GridSpec& grid, std::span<const std::uint8_t> centers, double r) {
  const DistanceField d(grid, squared_edt(grid, centers));
  std::vector<std::uint8_t> in(grid.size(), 0);
  for (CellIndex i = 0; i < in.size(); ++i) in[i] = (!grid.on_margin(i) && d[i] < r) ? 1 : 0;
  return DomainMask(grid, std::move(in));
}

/// One-cell face+vertex dilation, clipped at the margin.
inline DomainMask dilate_one(const DomainMask& mask) {
  const Neighborhood nb(mask.grid(), Adjacency::FaceVertex);
  std::vector<std::uint8_t> in(mask.cells().begin(), mask.cells().end());
  for (CellIndex i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    nb.for_each(i, [&](CellIndex n) {
      if (!mask.grid().on_margin(n)) in[n] = 1;
    });
  }
  return DomainMask(mask.grid(), std::move(in));
}

}  // namespace cmclass
