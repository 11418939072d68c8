#include <cstdio>

#include "cmclass/cmclass.hpp"

using namespace cmclass;

int main() {
  const double h = 1.0 / 128.0;
  const GridSpec grid({137, 61}, h, {-68 * h, -30 * h});

  // Two disks joined by a thin neck.
  const auto dumbbell = DomainMask::from_predicate(grid, [](const std::vector<double>& p) {
    const double x = p[0], y = p[1];
    return (x + 0.3) * (x + 0.3) + y * y < 0.04 || (x - 0.3) * (x - 0.3) + y * y < 0.04 ||
           (std::abs(x) <= 0.3 && std::abs(y) < 0.02);
  });

  for (double M : {5.0, 20.0}) {
    const ClassParams params{M, 0.1, std::nullopt};
    const auto rep = check_membership(dumbbell, params);
    std::printf("M = %4.1f  member = %s", M, rep.member() ? "yes" : "no");
    if (rep.failing_pair) {
      const auto& fp = *rep.failing_pair;
      std::printf("  failing pair %s -> %s, level %.4f, required radius %.4f", grid.describe(fp.x).c_str(),
                  grid.describe(fp.y).c_str(), fp.level, fp.required_radius);
    }
    std::printf("\n");
  }

  const auto left = grid.index({30, 30}), right = grid.index({106, 30});
  std::printf("widest tube between lobe centers: %.4f\n", max_tube_radius(dumbbell, left, right));
  return 0;
}
