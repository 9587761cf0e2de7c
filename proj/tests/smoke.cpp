#include <cstdio>
#include "latte/geometry.hpp"
int main() {
  auto o = latte::geo::LorentzPoint::origin(2, latte::geo::Curvature(1.0));
  std::printf("origin time %.3f\n", o.time());
  return 0;
}
