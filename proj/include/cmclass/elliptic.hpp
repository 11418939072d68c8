#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cmclass/grid.hpp"

namespace cmclass {

/// One real value per cell.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridSpec grid, double fill = 0.0) : grid_(std::move(grid)), value_(grid_.size(), fill) {
    require(std::isfinite(fill), ErrorCode::InvalidArgument, "field values must be finite");
  }
  ScalarField(GridSpec grid, std::vector<double> values) : grid_(std::move(grid)), value_(std::move(values)) {
    require(value_.size() == grid_.size(), ErrorCode::InvalidArgument, "field size does not match grid");
    for (std::size_t i = 0; i < value_.size(); ++i)
      require(std::isfinite(value_[i]), ErrorCode::InvalidArgument,
              "non-finite value at cell " + grid_.describe(i));
  }

  template <class Fn>
  static ScalarField from_function(const GridSpec& grid, Fn&& fn) {
    std::vector<double> v(grid.size());
    for (CellIndex i = 0; i < grid.size(); ++i) v[i] = fn(grid.center(i));
    return ScalarField(grid, std::move(v));
  }

  const GridSpec& grid() const noexcept { return grid_; }
  double operator[](CellIndex i) const { return value_[i]; }
  double& operator[](CellIndex i) { return value_[i]; }
  std::span<const double> values() const noexcept { return value_; }
  std::size_t size() const noexcept { return value_.size(); }

  friend bool operator==(const ScalarField& a, const ScalarField& b) {
    return a.grid_ == b.grid_ && a.value_ == b.value_;
  }

 private:
  GridSpec grid_;
  std::vector<double> value_;
};

namespace detail {

// Eigenvalues of a small symmetric matrix (row-major, n x n) by cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
  const auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i * n + j)]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off == 0.0 || off < 1e-300) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = at(i, i);
  return ev;
}

}  // namespace detail

/// Cellwise symmetric coefficient matrix A with ellipticity constant alpha:
/// alpha |xi|^2 <= <A xi, xi> on every cell.
class EllipticCoefficients {
 public:
  EllipticCoefficients() = default;

  /// `entries` holds k*k row-major values per cell, cells in index order.
  EllipticCoefficients(GridSpec grid, std::vector<double> entries, double alpha)
      : grid_(std::move(grid)), entries_(std::move(entries)), alpha_(alpha) {
    const auto k = static_cast<std::size_t>(grid_.dim());
    require(entries_.size() == grid_.size() * k * k, ErrorCode::InvalidArgument,
            "coefficient entry count does not match grid");
    require(std::isfinite(alpha_) && alpha_ > 0.0, ErrorCode::InvalidArgument, "alpha must be positive");
    for (CellIndex c = 0; c < grid_.size(); ++c) validate_cell(c);
  }

  static EllipticCoefficients constant(const GridSpec& grid, const std::vector<double>& matrix, double alpha) {
    const auto kk = static_cast<std::size_t>(grid.dim() * grid.dim());
    require(matrix.size() == kk, ErrorCode::InvalidArgument, "matrix must have k*k entries");
    std::vector<double> e;
    e.reserve(grid.size() * kk);
    for (CellIndex c = 0; c < grid.size(); ++c) e.insert(e.end(), matrix.begin(), matrix.end());
    return EllipticCoefficients(grid, std::move(e), alpha);
  }

  static EllipticCoefficients identity(const GridSpec& grid) {
    const auto k = grid.dim();
    std::vector<double> m(static_cast<std::size_t>(k * k), 0.0);
    for (int i = 0; i < k; ++i) m[static_cast<std::size_t>(i * k + i)] = 1.0;
    return constant(grid, m, 1.0);
  }

  const GridSpec& grid() const noexcept { return grid_; }
  double alpha() const noexcept { return alpha_; }
  double operator()(CellIndex c, int i, int j) const {
    const auto k = static_cast<std::size_t>(grid_.dim());
    return entries_[c * k * k + static_cast<std::size_t>(i) * k + static_cast<std::size_t>(j)];
  }
  std::span<const double> entries() const noexcept { return entries_; }

 private:
  void validate_cell(CellIndex c) const {
    const int k = grid_.dim();
    std::vector<double> m(static_cast<std::size_t>(k * k));
    double scale = 0.0;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const double v = (*this)(c, i, j);
        require(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite coefficient at " + grid_.describe(c));
        m[static_cast<std::size_t>(i * k + j)] = v;
        scale = std::max(scale, std::abs(v));
      }
    }
    for (int i = 0; i < k; ++i) {
      require((*this)(c, i, i) >= alpha_, ErrorCode::InvalidArgument,
              "diagonal entry below alpha at " + grid_.describe(c));
      for (int j = i + 1; j < k; ++j)
        require(std::abs((*this)(c, i, j) - (*this)(c, j, i)) <= 1e-12 * std::max(1.0, scale),
                ErrorCode::InvalidArgument, "coefficient matrix not symmetric at " + grid_.describe(c));
    }
    const auto ev = detail::symmetric_eigenvalues(m, k);
    const double lo = *std::min_element(ev.begin(), ev.end());
    require(lo >= alpha_ * (1.0 - 1e-12), ErrorCode::InvalidArgument,
            "minimum eigenvalue " + std::to_string(lo) + " below alpha at " + grid_.describe(c));
  }

  GridSpec grid_;
  std::vector<double> entries_;
  double alpha_ = 1.0;
};

/// Conservative face-flux operator for -div(A grad u) on a masked domain.
/// The flux through the face between c and c + e_a uses the mean of the two
/// cells' A_aa times the difference quotient. Rows outside the domain are
/// identity rows; couplings to outside cells are eliminated (u = 0 there).
class DirichletOperator {
 public:
  DirichletOperator(const DomainMask& omega, const EllipticCoefficients& coeff)
      : grid_(omega.grid()), inside_(omega.cells().begin(), omega.cells().end()) {
    require_same_grid(omega.grid(), coeff.grid());
    require(!omega.empty(), ErrorCode::EmptyDomain, "domain is empty");
    const int k = grid_.dim();
    inv_h2_ = 1.0 / (grid_.spacing() * grid_.spacing());
    face_.assign(grid_.size() * static_cast<std::size_t>(k), 0.0);
    for (CellIndex c = 0; c < grid_.size(); ++c) {
      const auto cc = grid_.coords(c);
      for (int a = 0; a < k; ++a) {
        if (cc[static_cast<std::size_t>(a)] + 1 >= grid_.extent(a)) continue;
        const auto n = c + grid_.stride(a);
        face_[c * static_cast<std::size_t>(k) + static_cast<std::size_t>(a)] =
            0.5 * (coeff(c, a, a) + coeff(n, a, a));
      }
    }
    for (CellIndex c = 0; c < grid_.size(); ++c)
      if (inside_[c]) unknowns_.push_back(c);
  }

  const GridSpec& grid() const noexcept { return grid_; }
  bool inside(CellIndex c) const { return inside_[c] != 0; }
  const std::vector<CellIndex>& unknowns() const noexcept { return unknowns_; }

  /// Averaged coefficient on the face between c and c + e_axis.
  double face_coefficient(CellIndex c, int axis) const {
    return face_[c * static_cast<std::size_t>(grid_.dim()) + static_cast<std::size_t>(axis)];
  }

  /// Face coefficient divided by h^2.
  double face_weight(CellIndex c, int axis) const { return face_coefficient(c, axis) * inv_h2_; }

  /// Matrix entry (row, col) of the full operator.
  double entry(CellIndex row, CellIndex col) const {
    if (!inside_[row] || !inside_[col]) return row == col ? (inside_[row] ? diagonal(row) : 1.0) : 0.0;
    if (row == col) return diagonal(row);
    for (int a = 0; a < grid_.dim(); ++a) {
      if (col == row + grid_.stride(a) && same_line(row, col, a)) return -face_weight(row, a);
      if (row == col + grid_.stride(a) && same_line(col, row, a)) return -face_weight(col, a);
    }
    return 0.0;
  }

  double diagonal(CellIndex c) const {
    if (!inside_[c]) return 1.0;
    double d = 0.0;
    const auto cc = grid_.coords(c);
    for (int a = 0; a < grid_.dim(); ++a) {
      d += face_weight(c, a);
      if (cc[static_cast<std::size_t>(a)] > 0) d += face_weight(c - grid_.stride(a), a);
    }
    return d;
  }

  /// out = L u over the whole grid.
  void apply(std::span<const double> u, std::span<double> out) const {
    const int k = grid_.dim();
    for (CellIndex c = 0; c < grid_.size(); ++c) {
      if (!inside_[c]) {
        out[c] = u[c];
        continue;
      }
      const auto cc = grid_.coords(c);
      double s = 0.0;
      for (int a = 0; a < k; ++a) {
        const auto st = grid_.stride(a);
        const double wp = face_weight(c, a);
        const double up = inside_[c + st] ? u[c + st] : 0.0;
        s += wp * (u[c] - up);
        if (cc[static_cast<std::size_t>(a)] > 0) {
          const double wm = face_weight(c - st, a);
          const double um = inside_[c - st] ? u[c - st] : 0.0;
          s += wm * (u[c] - um);
        }
      }
      out[c] = s;
    }
  }

 private:
  bool same_line(CellIndex lo, CellIndex hi, int axis) const {
    const auto a = grid_.coords(lo), b = grid_.coords(hi);
    for (int i = 0; i < grid_.dim(); ++i)
      if (i != axis && a[static_cast<std::size_t>(i)] != b[static_cast<std::size_t>(i)]) return false;
    return true;
  }

  GridSpec grid_;
  std::vector<std::uint8_t> inside_;
  double inv_h2_ = 1.0;
  std::vector<double> face_;
  std::vector<CellIndex> unknowns_;
};

inline DirichletOperator assemble(const DomainMask& omega, const EllipticCoefficients& coeff) {
  return DirichletOperator(omega, coeff);
}

struct SolveReport {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  double dirichlet_energy = 0.0;  ///< sum over faces of a_face (du/h)^2 h^k
  double load_pairing = 0.0;      ///< sum over cells of f u h^k
};

struct SolveResult {
  ScalarField u;  ///< zero-extended: bitwise 0 outside the domain
  SolveReport report;
};

namespace detail {

inline double cell_volume(const GridSpec& g) { return std::pow(g.spacing(), g.dim()); }

struct EnergyTerms {
  double energy = 0.0;          // sum a_face (du/h)^2 h^k
  double alpha_gradient = 0.0;  // sum alpha (du/h)^2 h^k, accumulated term by term
};

// Both sums run over the same faces in the same order with a_face >= alpha per
// term, so energy >= alpha_gradient holds in floating point too.
inline EnergyTerms energy_terms(const DirichletOperator& op, std::span<const double> u, double alpha) {
  const auto& g = op.grid();
  const double h2 = g.spacing() * g.spacing();
  const double vol = cell_volume(g);
  EnergyTerms t;
  for (CellIndex c = 0; c < g.size(); ++c) {
    const auto cc = g.coords(c);
    for (int a = 0; a < g.dim(); ++a) {
      if (cc[static_cast<std::size_t>(a)] + 1 >= g.extent(a)) continue;
      const auto n = c + g.stride(a);
      const double du = (op.inside(n) ? u[n] : 0.0) - (op.inside(c) ? u[c] : 0.0);
      const double q = du * du / h2 * vol;
      t.energy += op.face_coefficient(c, a) * q;
      t.alpha_gradient += alpha * q;
    }
  }
  return t;
}

}  // namespace detail

/// Discrete weak solution of -div(A grad u) = f in omega, u = 0 outside, by
/// Jacobi-preconditioned conjugate gradients on the domain cells. Fails with
/// NoConvergence after 50 * sqrt(total cells) iterations.
inline SolveResult solve_dirichlet(const DomainMask& omega, const EllipticCoefficients& coeff, const ScalarField& f,
                                   double tol) {
  require_same_grid(omega.grid(), coeff.grid());
  require_same_grid(omega.grid(), f.grid());
  require(tol > 0.0 && tol < 1.0, ErrorCode::InvalidArgument, "tol must be in (0, 1)");
  const auto op = assemble(omega, coeff);
  const auto& g = omega.grid();
  const auto& dofs = op.unknowns();
  const std::size_t n = g.size();

  SolveResult out{ScalarField(g, 0.0), {}};
  double fnorm2 = 0.0;
  for (auto c : dofs) fnorm2 += f[c] * f[c];
  if (fnorm2 == 0.0) return out;
  const double fnorm = std::sqrt(fnorm2);

  const auto cap = static_cast<std::size_t>(std::ceil(50.0 * std::sqrt(static_cast<double>(n))));
  std::vector<double> u(n, 0.0), r(n, 0.0), z(n, 0.0), p(n, 0.0), q(n, 0.0), inv_diag(n, 0.0);
  for (auto c : dofs) {
    inv_diag[c] = 1.0 / op.diagonal(c);
    r[c] = f[c];
  }

  const auto true_residual = [&] {
    op.apply(u, q);
    double s = 0.0;
    for (auto c : dofs) {
      r[c] = f[c] - q[c];
      s += r[c] * r[c];
    }
    return std::sqrt(s) / fnorm;
  };

  std::size_t it = 0;
  double rel = 1.0;
  while (true) {
    double rz = 0.0;
    for (auto c : dofs) {
      z[c] = inv_diag[c] * r[c];
      p[c] = z[c];
      rz += r[c] * z[c];
    }
    bool restart = false;
    while (!restart) {
      if (it >= cap) fail(ErrorCode::NoConvergence, "conjugate gradients hit the iteration cap");
      op.apply(p, q);
      double pq = 0.0;
      for (auto c : dofs) pq += p[c] * q[c];
      const double step = rz / pq;
      double rr = 0.0;
      for (auto c : dofs) {
        u[c] += step * p[c];
        r[c] -= step * q[c];
        rr += r[c] * r[c];
      }
      ++it;
      if (std::sqrt(rr) / fnorm <= tol) {
        rel = true_residual();
        if (rel <= tol) break;
        restart = true;  // recurrence drifted; restart from the true residual
        continue;
      }
      double rz_new = 0.0;
      for (auto c : dofs) {
        z[c] = inv_diag[c] * r[c];
        rz_new += r[c] * z[c];
      }
      const double beta = rz_new / rz;
      rz = rz_new;
      for (auto c : dofs) p[c] = z[c] + beta * p[c];
    }
    if (!restart) break;
  }

  std::vector<double> ext(n, 0.0);
  for (auto c : dofs) ext[c] = u[c];
  out.u = ScalarField(g, std::move(ext));
  out.report.iterations = it;
  out.report.relative_residual = rel;
  const auto terms = detail::energy_terms(op, out.u.values(), coeff.alpha());
  out.report.dirichlet_energy = terms.energy;
  const double vol = detail::cell_volume(g);
  for (auto c : dofs) out.report.load_pairing += f[c] * out.u[c] * vol;
  return out;
}

struct EnergyCheck {
  bool holds = false;
  double alpha_gradient = 0.0;  ///< alpha * sum |grad u|^2 h^k
  double energy = 0.0;          ///< sum <A grad u, grad u> h^k
  double load_pairing = 0.0;    ///< sum f u h^k
  double identity_gap = 0.0;    ///< |energy - load_pairing|
  double identity_bound = 0.0;  ///< 10 tol ||f|| ||u||
};

/// Verifies alpha * |grad u|^2 <= <A grad u, grad u> = f u in the discrete
/// sense. The inequality is checked exactly, the identity up to the solver
/// tolerance. Throws SupportViolation when u is nonzero off the domain.
inline EnergyCheck energy_check(const ScalarField& u, const DomainMask& omega, const EllipticCoefficients& coeff,
                                const ScalarField& f, double tol) {
  require_same_grid(u.grid(), omega.grid());
  require_same_grid(u.grid(), coeff.grid());
  require_same_grid(u.grid(), f.grid());
  for (CellIndex c = 0; c < u.size(); ++c)
    if (!omega[c] && std::abs(u[c]) > 1e-14)
      fail(ErrorCode::SupportViolation, "u is nonzero at " + u.grid().describe(c) + " outside the domain");
  EnergyCheck e;
  if (omega.empty()) {
    e.holds = true;
    return e;
  }
  const DirichletOperator op(omega, coeff);
  const auto terms = detail::energy_terms(op, u.values(), coeff.alpha());
  const double vol = detail::cell_volume(u.grid());
  double fn = 0.0, un = 0.0;
  for (auto c : op.unknowns()) {
    e.load_pairing += f[c] * u[c] * vol;
    fn += f[c] * f[c] * vol;
    un += u[c] * u[c] * vol;
  }
  e.alpha_gradient = terms.alpha_gradient;
  e.energy = terms.energy;
  e.identity_gap = std::abs(e.energy - e.load_pairing);
  e.identity_bound = 10.0 * tol * std::sqrt(fn) * std::sqrt(un);
  e.holds = e.alpha_gradient <= e.energy && e.identity_gap <= e.identity_bound;
  return e;
}

}  // namespace cmclass
