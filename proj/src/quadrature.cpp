#include "rtstokes/quadrature.hpp"

#include <cmath>

namespace rtstokes {

const QuadratureRule &mfmfe_rule() {
  static const QuadratureRule rule{
      {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0 / 3.0, 1.0 / 3.0}},
      {1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 3.0 / 4.0},
      2};
  return rule;
}

const QuadratureRule &midpoint_rule() {
  static const QuadratureRule rule{
      {{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}}, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 2};
  return rule;
}

const QuadratureRule &degree5_rule() {
  static const QuadratureRule rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a = (6.0 - s15) / 21.0;
    const double b = (6.0 + s15) / 21.0;
    const double wa = (155.0 - s15) / 1200.0;
    const double wb = (155.0 + s15) / 1200.0;
    return QuadratureRule{{{1.0 / 3.0, 1.0 / 3.0},
                           {a, a},
                           {1.0 - 2.0 * a, a},
                           {a, 1.0 - 2.0 * a},
                           {b, b},
                           {1.0 - 2.0 * b, b},
                           {b, 1.0 - 2.0 * b}},
                          {9.0 / 40.0, wa, wa, wa, wb, wb, wb},
                          5};
  }();
  return rule;
}

const LineRule &gauss_legendre(int points) {
  static const LineRule two = [] {
    const double d = 0.5 / std::sqrt(3.0);
    return LineRule{{0.5 - d, 0.5 + d}, {0.5, 0.5}, 3};
  }();
  static const LineRule three = [] {
    const double d = 0.5 * std::sqrt(0.6);
    return LineRule{{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}, 5};
  }();
  if (points == 2) return two;
  if (points == 3) return three;
  throw InvalidArgument("edge Gauss rule supports 2 or 3 points");
}

}  // namespace rtstokes
