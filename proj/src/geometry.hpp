#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace irsuav {

using Vec3 = Eigen::Vector3d;

inline double horizontal_dist(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace irsuav
