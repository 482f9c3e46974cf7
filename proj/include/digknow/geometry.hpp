#pragma once

#include <algorithm>
#include <cmath>

namespace digknow {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator-(const Vec3& a, const Vec3& b) {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend bool operator==(const Vec3& a, const Vec3& b) = default;
};

inline double norm(const Vec3& v) {
    return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

// Axis-aligned box, world frame, z-up.
struct Aabb {
    Vec3 min;
    Vec3 max;

    bool valid() const {
        return min.x <= max.x && min.y <= max.y && min.z <= max.z;
    }

    Vec3 centroid() const {
        return {(min.x + max.x) / 2.0, (min.y + max.y) / 2.0, (min.z + max.z) / 2.0};
    }

    Vec3 half_extents() const {
        return {(max.x - min.x) / 2.0, (max.y - min.y) / 2.0, (max.z - min.z) / 2.0};
    }

    double volume() const {
        return (max.x - min.x) * (max.y - min.y) * (max.z - min.z);
    }

    friend bool operator==(const Aabb& a, const Aabb& b) = default;
};

inline double overlap_1d(double amin, double amax, double bmin, double bmax) {
    return std::max(0.0, std::min(amax, bmax) - std::max(amin, bmin));
}

// Fraction of a's volume lying inside b. Degenerate (zero-volume) a counts as
// fully inside when its centroid is contained in b.
inline double containment_fraction(const Aabb& a, const Aabb& b) {
    const double va = a.volume();
    if (va <= 0.0) {
        const Vec3 c = a.centroid();
        const bool inside = c.x >= b.min.x && c.x <= b.max.x && c.y >= b.min.y &&
                            c.y <= b.max.y && c.z >= b.min.z && c.z <= b.max.z;
        return inside ? 1.0 : 0.0;
    }
    const double ox = overlap_1d(a.min.x, a.max.x, b.min.x, b.max.x);
    const double oy = overlap_1d(a.min.y, a.max.y, b.min.y, b.max.y);
    const double oz = overlap_1d(a.min.z, a.max.z, b.min.z, b.max.z);
    return (ox * oy * oz) / va;
}

inline bool footprints_overlap(const Aabb& a, const Aabb& b) {
    return overlap_1d(a.min.x, a.max.x, b.min.x, b.max.x) > 0.0 &&
           overlap_1d(a.min.y, a.max.y, b.min.y, b.max.y) > 0.0;
}

} // namespace digknow
