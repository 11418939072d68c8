#include <cmath>
#include <cstdio>

#include "cmclass/cmclass.hpp"

using namespace cmclass;

int main() {
  for (int n : {16, 32, 64}) {
    const double h = 1.0 / n;
    const std::int64_t half = n + 2;
    const GridSpec grid({2 * half + 1, 2 * half + 1}, h, {-half * h, -half * h});
    const auto disk = DomainMask::from_predicate(grid, [](const std::vector<double>& p) {
      return p[0] * p[0] + p[1] * p[1] < 1.0;
    });
    const ScalarField f(grid, 1.0);
    const auto res = solve_dirichlet(disk, EllipticCoefficients::identity(grid), f, 1e-10);

    double err = 0.0;
    for (auto c : disk.true_cells()) {
      const auto p = grid.center(c);
      const double exact = (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0;
      err = std::max(err, std::abs(res.u[c] - exact));
    }
    std::printf("h = 1/%-3d  iterations %4zu  max relative error %.3e\n", n, res.report.iterations, err / 0.25);
  }
  return 0;
}
