#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cmclass/grid.hpp"

namespace cmclass {

namespace detail {

// Lower envelope of the parabolas (q - v)^2 + f(v) over the finite sites of one
// line (separable exact EDT). Sites at kInfinite are skipped. Inputs are integers,
// so the output is exact; only the breakpoints are held as doubles.
inline void envelope_1d(std::span<std::int64_t> f, std::vector<std::int64_t>& site,
                        std::vector<double>& z, std::vector<std::int64_t>& out) {
  constexpr auto inf = DistanceField::kInfinite;
  const auto n = static_cast<std::int64_t>(f.size());
  site.resize(f.size());
  z.resize(f.size() + 1);
  out.resize(f.size());
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    const auto fq = f[static_cast<std::size_t>(q)];
    if (fq == inf) continue;
    while (k >= 0) {
      const auto v = site[static_cast<std::size_t>(k)];
      const auto fv = f[static_cast<std::size_t>(v)];
      const double s = static_cast<double>((fq + q * q) - (fv + v * v)) / static_cast<double>(2 * (q - v));
      if (s <= z[static_cast<std::size_t>(k)]) {
        --k;
        continue;
      }
      ++k;
      site[static_cast<std::size_t>(k)] = q;
      z[static_cast<std::size_t>(k)] = s;
      break;
    }
    if (k < 0) {
      k = 0;
      site[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
    }
    z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
  }
  if (k < 0) return;  // no finite site on this line
  std::int64_t j = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < static_cast<double>(q)) ++j;
    const auto v = site[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(q)] = (q - v) * (q - v) + f[static_cast<std::size_t>(v)];
  }
  std::copy(out.begin(), out.end(), f.begin());
}

}  // namespace detail

/// Exact squared Euclidean distance (in cell steps) from every cell center to the
/// nearest cell center flagged in `features`. Cells are kInfinite when no feature exists.
inline std::vector<std::int64_t> squared_edt(const GridSpec& grid, std::span<const std::uint8_t> features) {
  require(features.size() == grid.size(), ErrorCode::InvalidArgument, "feature field size does not match grid");
  std::vector<std::int64_t> d(grid.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = features[i] ? 0 : DistanceField::kInfinite;

  std::vector<std::int64_t> line, site, out;
  std::vector<double> z;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const auto n = static_cast<std::size_t>(grid.extent(axis));
    const auto stride = grid.stride(axis);
    line.resize(n);
    for (CellIndex start = 0; start < grid.size(); ++start) {
      if ((start / stride) % n != 0) continue;  // not the first cell of a line along `axis`
      for (std::size_t q = 0; q < n; ++q) line[q] = d[start + q * stride];
      detail::envelope_1d(line, site, z, out);
      for (std::size_t q = 0; q < n; ++q) d[start + q * stride] = line[q];
    }
  }
  return d;
}

/// Distance from each cell center to the nearest false cell center of the mask.
inline DistanceField edt(const DomainMask& mask) {
  std::vector<std::uint8_t> outside(mask.size());
  for (std::size_t i = 0; i < outside.size(); ++i) outside[i] = mask[i] ? 0 : 1;
  return DistanceField(mask.grid(), squared_edt(mask.grid(), outside));
}

/// Distance from each cell center to the nearest cell of `set`.
inline DistanceField distance_to(const CompactSet& set) {
  return DistanceField(set.grid(), squared_edt(set.grid(), set.flags()));
}

}  // namespace cmclass
