#pragma once

#include <Eigen/Core>

namespace tlsdeform::predicates {

/// Sign of the signed area of (a, b, c): +1 counter-clockwise, -1 clockwise,
/// 0 collinear. Exact for all finite double inputs.
int orient2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c);

/// +1 if d lies strictly inside the circumcircle of counter-clockwise (a, b, c),
/// -1 if strictly outside, 0 if cocircular. Exact for all finite double inputs.
int incircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
             const Eigen::Vector2d& d);

}  // namespace tlsdeform::predicates
