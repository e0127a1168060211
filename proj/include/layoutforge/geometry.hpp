#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace layoutforge {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

    bool is_finite() const;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct ObjectSpec {
    std::string name;
    Vec3 size;  // cm
    std::string category;

    friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

// Supporting surface. The xy extent is [origin_x, origin_x + width] x
// [origin_y, origin_y + depth]; +y points away from the viewer, so the front
// edge is at origin_y.
struct Boundary {
    double width = 120.0;
    double depth = 60.0;
    double surface_z = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    void check() const;

    friend bool operator==(const Boundary&, const Boundary&) = default;
};

struct SceneSpec {
    std::string instruction;
    std::vector<ObjectSpec> objects;
    Boundary boundary;
    std::uint64_t rng_seed = 0;

    // Throws InvariantError on empty object lists, duplicate names,
    // non-positive sizes or an invalid boundary.
    void check() const;

    const ObjectSpec* find(const std::string& name) const;
    std::vector<std::string> object_names() const;
};

struct Pose {
    Vec3 position;  // box center, cm
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct Aabb {
    Vec3 min;
    Vec3 max;

    double volume() const;
    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extent() const { return max - min; }
    double footprint_area() const;

    friend bool operator==(const Aabb&, const Aabb&) = default;
};

// Normalized position on the optimization plane, top-left corner convention.
struct PlanePoint {
    double u = 0.0;
    double v = 0.0;

    friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

struct Layout {
    std::map<std::string, Pose> poses;
    std::map<std::string, Aabb> boxes;
    std::map<std::string, PlanePoint> plane_points;

    std::size_t size() const { return poses.size(); }
    bool contains(const std::string& name) const { return poses.count(name) != 0; }

    // Inserts a consistent pose/box/plane-point triple.
    void place(const std::string& name, const Pose& pose, const Vec3& size, PlanePoint point);

    // Throws InvariantError when the three maps disagree on keys.
    void check() const;

    friend bool operator==(const Layout&, const Layout&) = default;
};

Aabb aabb_from_pose(const Pose& pose, const Vec3& size);

double intersection_volume(const Aabb& a, const Aabb& b);

// Throws InvariantError("degenerate boxes") when both boxes have zero volume.
double iou(const Aabb& a, const Aabb& b);

// Closed overlap test of the xy projections (touching edges intersect).
bool footprints_intersect(const Aabb& a, const Aabb& b);

// xy overlap area, zero when disjoint or touching.
double footprint_overlap_area(const Aabb& a, const Aabb& b);

bool is_stacking_pair(const Aabb& a, const Aabb& b);

// Slack for containment tests, absorbing rounding in center/size round trips.
inline constexpr double kContainEps = 1e-9;

// True iff top's xy projection lies inside bottom's (closed, up to kContainEps).
bool footprint_contains(const Aabb& bottom, const Aabb& top);

// True iff the box lies inside the boundary's xy extent and not below its
// surface, up to kContainEps.
bool inside_boundary(const Aabb& box, const Boundary& boundary);

// Affine map between boundary centimeters and the optimization plane. Plane
// axes point the same way as the boundary's; z stays in cm.
struct PlaneFrame {
    Boundary boundary;
    double plane_w = 600.0;
    double plane_h = 300.0;

    double px_per_cm_x() const { return plane_w / boundary.width; }
    double px_per_cm_y() const { return plane_h / boundary.depth; }

    double x_to_px(double x_cm) const { return (x_cm - boundary.origin_x) * px_per_cm_x(); }
    double y_to_px(double y_cm) const { return (y_cm - boundary.origin_y) * px_per_cm_y(); }
    double x_to_cm(double x_px) const { return boundary.origin_x + x_px / px_per_cm_x(); }
    double y_to_cm(double y_px) const { return boundary.origin_y + y_px / px_per_cm_y(); }

    // Box with x/y in plane pixels and z unchanged.
    Aabb to_plane(const Aabb& box_cm) const;
};

}  // namespace layoutforge
