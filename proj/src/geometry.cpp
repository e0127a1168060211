#include "layoutforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "layoutforge/errors.hpp"

namespace layoutforge {

bool Vec3::is_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

void Boundary::check() const {
    if (!(width > 0.0) || !(depth > 0.0)) {
        throw InvariantError("boundary width and depth must be positive");
    }
    if (!std::isfinite(surface_z) || !std::isfinite(origin_x) || !std::isfinite(origin_y)) {
        throw InvariantError("boundary coordinates must be finite");
    }
}

void SceneSpec::check() const {
    if (objects.empty()) {
        throw InvariantError("scene has no objects");
    }
    boundary.check();
    std::set<std::string> seen;
    for (const auto& obj : objects) {
        if (obj.name.empty()) {
            throw InvariantError("object with empty name");
        }
        if (!seen.insert(obj.name).second) {
            throw InvariantError("duplicate object name: " + obj.name);
        }
        if (!obj.size.is_finite() || obj.size.x <= 0.0 || obj.size.y <= 0.0 || obj.size.z <= 0.0) {
            throw InvariantError("object size must be positive: " + obj.name);
        }
    }
}

const ObjectSpec* SceneSpec::find(const std::string& name) const {
    auto it = std::find_if(objects.begin(), objects.end(),
                           [&](const ObjectSpec& o) { return o.name == name; });
    return it == objects.end() ? nullptr : &*it;
}

std::vector<std::string> SceneSpec::object_names() const {
    std::vector<std::string> names;
    names.reserve(objects.size());
    for (const auto& o : objects) names.push_back(o.name);
    return names;
}

double Aabb::volume() const {
    const Vec3 e = extent();
    return e.x * e.y * e.z;
}

double Aabb::footprint_area() const {
    const Vec3 e = extent();
    return e.x * e.y;
}

void Layout::place(const std::string& name, const Pose& pose, const Vec3& size, PlanePoint point) {
    poses[name] = pose;
    boxes[name] = aabb_from_pose(pose, size);
    plane_points[name] = point;
}

void Layout::check() const {
    if (poses.size() != boxes.size() || poses.size() != plane_points.size()) {
        throw InvariantError("layout maps have different sizes");
    }
    for (const auto& [name, _] : poses) {
        if (!boxes.count(name) || !plane_points.count(name)) {
            throw InvariantError("layout maps disagree on object: " + name);
        }
    }
}

Aabb aabb_from_pose(const Pose& pose, const Vec3& size) {
    const Vec3 half = size * 0.5;
    return {pose.position - half, pose.position + half};
}

double intersection_volume(const Aabb& a, const Aabb& b) {
    double v = 1.0;
    for (int k = 0; k < 3; ++k) {
        const double lo = std::max(a.min[k], b.min[k]);
        const double hi = std::min(a.max[k], b.max[k]);
        v *= std::max(0.0, hi - lo);
    }
    return v;
}

double iou(const Aabb& a, const Aabb& b) {
    const double va = a.volume();
    const double vb = b.volume();
    if (va <= 0.0 && vb <= 0.0) {
        throw InvariantError("degenerate boxes");
    }
    const double inter = intersection_volume(a, b);
    return inter / (va + vb - inter);
}

bool footprints_intersect(const Aabb& a, const Aabb& b) {
    return a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y;
}

double footprint_overlap_area(const Aabb& a, const Aabb& b) {
    const double dx = std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x);
    const double dy = std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y);
    return std::max(0.0, dx) * std::max(0.0, dy);
}

bool is_stacking_pair(const Aabb& a, const Aabb& b) {
    return footprints_intersect(a, b) && (a.max.z <= b.min.z || b.max.z <= a.min.z);
}

bool footprint_contains(const Aabb& bottom, const Aabb& top) {
    return bottom.min.x <= top.min.x + kContainEps && top.max.x <= bottom.max.x + kContainEps &&
           bottom.min.y <= top.min.y + kContainEps && top.max.y <= bottom.max.y + kContainEps;
}

bool inside_boundary(const Aabb& box, const Boundary& boundary) {
    return box.min.x >= boundary.origin_x - kContainEps &&
           box.max.x <= boundary.origin_x + boundary.width + kContainEps &&
           box.min.y >= boundary.origin_y - kContainEps &&
           box.max.y <= boundary.origin_y + boundary.depth + kContainEps && box.min.z >= boundary.surface_z - kContainEps;
}

Aabb PlaneFrame::to_plane(const Aabb& box_cm) const {
    return {{x_to_px(box_cm.min.x), y_to_px(box_cm.min.y), box_cm.min.z},
            {x_to_px(box_cm.max.x), y_to_px(box_cm.max.y), box_cm.max.z}};
}

}  // namespace layoutforge
