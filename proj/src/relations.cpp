#include "layoutforge/relations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "layoutforge/errors.hpp"

namespace layoutforge {

namespace {

template <typename Enum, std::size_t N>
Enum parse_token(std::string_view token, const std::array<std::pair<Enum, std::string_view>, N>& table,
                 std::string_view what) {
    for (const auto& [value, text] : table) {
        if (text == token) return value;
    }
    throw SchemaError("unknown " + std::string(what) + " token: \"" + std::string(token) + "\"");
}

template <typename Enum, std::size_t N>
std::string_view token_of(Enum value, const std::array<std::pair<Enum, std::string_view>, N>& table) {
    for (const auto& [v, text] : table) {
        if (v == value) return text;
    }
    return "?";
}

constexpr std::array<std::pair<Arity, std::string_view>, 3> kArity{{
    {Arity::Unary, "Unary"}, {Arity::Binary, "Binary"}, {Arity::Nary, "Nary"}}};
constexpr std::array<std::pair<RelationKind, std::string_view>, 3> kKind{{
    {RelationKind::Anchoring, "Anchoring"}, {RelationKind::Relative, "Relative"}, {RelationKind::Alignment, "Alignment"}}};
constexpr std::array<std::pair<Axis, std::string_view>, 5> kAxis{{
    {Axis::None, "none"}, {Axis::X, "x"}, {Axis::Y, "y"}, {Axis::Z, "z"}, {Axis::XY, "xy"}}};
constexpr std::array<std::pair<AlignMode, std::string_view>, 4> kAlign{{
    {AlignMode::None, "none"}, {AlignMode::CenterX, "center_x"}, {AlignMode::CenterY, "center_y"},
    {AlignMode::CenterZ, "center_z"}}};
constexpr std::array<std::pair<AnchorZone, std::string_view>, 6> kZone{{
    {AnchorZone::CentralColumn, "central_column"}, {AnchorZone::CentralRow, "central_row"},
    {AnchorZone::NearFrontEdge, "near_front_edge"}, {AnchorZone::NearBackEdge, "near_back_edge"},
    {AnchorZone::NearLeftEdge, "near_left_edge"}, {AnchorZone::NearRightEdge, "near_right_edge"}}};
constexpr std::array<std::pair<Provenance, std::string_view>, 3> kProvenance{{
    {Provenance::Builtin, "builtin"}, {Provenance::LlmSynthesized, "llm_synthesized"},
    {Provenance::Adjusted, "adjusted"}}};

// Contact tolerance for z-axis relations, cm.
constexpr double kContactEps = 1e-6;

double gaussian_falloff(double distance, double width) {
    if (distance <= 0.0) return 1.0;
    if (width <= 0.0) return 0.0;
    const double r = distance / width;
    return std::exp(-0.5 * r * r);
}

double band_score(double gap, double lo, double hi, double width) {
    if (gap < lo) return gaussian_falloff(lo - gap, width);
    if (gap > hi) return gaussian_falloff(gap - hi, width);
    return 1.0;
}

double axis_overlap_ratio(const Aabb& a, const Aabb& b, int axis) {
    const double overlap = std::min(a.max[axis], b.max[axis]) - std::max(a.min[axis], b.min[axis]);
    const double shorter = std::min(a.max[axis] - a.min[axis], b.max[axis] - b.min[axis]);
    if (overlap <= 0.0 || shorter <= 0.0) return 0.0;
    return std::min(1.0, overlap / shorter);
}

// Signed clearance of `a` beyond `b` along `axis` in direction `sign`.
double directed_gap(const Aabb& a, const Aabb& b, int axis, int sign) {
    return sign > 0 ? a.min[axis] - b.max[axis] : b.min[axis] - a.max[axis];
}

double edge_distance(const Aabb& a, const Aabb& b) {
    const double gx = std::max(a.min.x - b.max.x, b.min.x - a.max.x);
    const double gy = std::max(a.min.y - b.max.y, b.min.y - a.max.y);
    return std::max(gx, gy);
}

struct ZoneGeometry {
    int axis;
    int reference;  // -1 min edge, 0 center, +1 max edge
    double lo;
    double hi;
};

ZoneGeometry zone_geometry(AnchorZone zone) {
    switch (zone) {
        case AnchorZone::CentralColumn: return {0, 0, 1.0 / 3.0, 2.0 / 3.0};
        case AnchorZone::CentralRow: return {1, 0, 1.0 / 3.0, 2.0 / 3.0};
        case AnchorZone::NearFrontEdge: return {1, -1, 0.0, 0.15};
        case AnchorZone::NearBackEdge: return {1, 1, 0.85, 1.0};
        case AnchorZone::NearLeftEdge: return {0, -1, 0.0, 0.15};
        case AnchorZone::NearRightEdge: return {0, 1, 0.85, 1.0};
    }
    return {0, 0, 0.0, 1.0};
}

double score_relative(const RelationDef& def, const Aabb& a, const Aabb& b, double plane_w, double widen) {
    const ConstraintSpec& c = def.constraint;
    const Rpc& rpc = *def.rpc;
    const double lo = c.min_gap_frac * plane_w / widen;
    const double hi = c.max_gap_frac * plane_w * widen;
    const double width = c.falloff_frac * plane_w * widen;

    double s = 1.0;
    if (rpc[0] == 0 && rpc[1] == 0 && rpc[2] == 0) {
        const double gap = edge_distance(a, b);
        if (gap <= 0.0) return 0.0;
        s *= band_score(gap, lo, hi, width);
    }
    for (int axis = 0; axis < 2; ++axis) {
        if (rpc[axis] == 0) continue;
        const double gap = directed_gap(a, b, axis, rpc[axis]);
        if (gap <= 0.0) return 0.0;
        s *= band_score(gap, lo, hi, width);
    }
    if (rpc[2] != 0) {
        const double contact = directed_gap(a, b, 2, rpc[2]);
        if (std::abs(contact) > kContactEps * widen) return 0.0;
    }

    if (c.require_overlap) {
        double ratio = 0.0;
        switch (c.overlap_axis) {
            case Axis::X: ratio = axis_overlap_ratio(a, b, 0); break;
            case Axis::Y: ratio = axis_overlap_ratio(a, b, 1); break;
            case Axis::Z: ratio = axis_overlap_ratio(a, b, 2); break;
            case Axis::XY: {
                const Aabb& top = rpc[2] < 0 ? b : a;
                const double area = top.footprint_area();
                ratio = area > 0.0 ? footprint_overlap_area(a, b) / area : 0.0;
                break;
            }
            case Axis::None: ratio = 1.0; break;
        }
        s *= std::min(1.0, ratio * widen);
    }
    return s;
}

double score_anchor(const RelationDef& def, const Aabb& a, double plane_w, double plane_h, double widen) {
    const ZoneGeometry z = zone_geometry(*def.constraint.anchor_zone);
    const double extent = z.axis == 0 ? plane_w : plane_h;
    const double half_growth = (widen - 1.0) * (z.hi - z.lo) * extent * 0.5;
    const double lo = z.lo * extent - half_growth;
    const double hi = z.hi * extent + half_growth;
    double ref = 0.0;
    if (z.reference < 0) {
        ref = a.min[z.axis];
    } else if (z.reference > 0) {
        ref = a.max[z.axis];
    } else {
        ref = 0.5 * (a.min[z.axis] + a.max[z.axis]);
    }
    const double width = def.constraint.falloff_frac * plane_w * widen;
    return band_score(ref, lo, hi, width);
}

double max_center_deviation(std::span<const Aabb> boxes, int axis) {
    double mean = 0.0;
    for (const auto& b : boxes) mean += 0.5 * (b.min[axis] + b.max[axis]);
    mean /= static_cast<double>(boxes.size());
    double dev = 0.0;
    for (const auto& b : boxes) dev = std::max(dev, std::abs(0.5 * (b.min[axis] + b.max[axis]) - mean));
    return dev;
}

double score_alignment(const RelationDef& def, std::span<const Aabb> boxes, double plane_w, double widen) {
    double dev = 0.0;
    switch (def.constraint.align_mode) {
        case AlignMode::CenterX: dev = max_center_deviation(boxes, 1); break;
        case AlignMode::CenterY: dev = max_center_deviation(boxes, 0); break;
        case AlignMode::CenterZ:
            dev = std::max(max_center_deviation(boxes, 0), max_center_deviation(boxes, 1));
            break;
        case AlignMode::None: return 1.0;
    }
    const double slack = def.constraint.align_slack_frac * plane_w * widen;
    const double width = def.constraint.falloff_frac * plane_w * widen;
    return gaussian_falloff(dev - slack, width);
}

std::vector<Aabb> plane_boxes_for(const RelationInstance& instance, const Layout& layout,
                                  const PlaneFrame& frame) {
    std::vector<Aabb> boxes;
    boxes.reserve(instance.args.size());
    for (const auto& arg : instance.args) {
        auto it = layout.boxes.find(arg);
        if (it == layout.boxes.end()) {
            throw LibraryError("relation " + instance.to_string() + " references object missing from layout: " +
                               arg);
        }
        boxes.push_back(frame.to_plane(it->second));
    }
    return boxes;
}

int sign_of(int v) { return (v > 0) - (v < 0); }

}  // namespace

std::string_view to_string(Arity v) { return token_of(v, kArity); }
std::string_view to_string(RelationKind v) { return token_of(v, kKind); }
std::string_view to_string(Axis v) { return token_of(v, kAxis); }
std::string_view to_string(AlignMode v) { return token_of(v, kAlign); }
std::string_view to_string(AnchorZone v) { return token_of(v, kZone); }
std::string_view to_string(Provenance v) { return token_of(v, kProvenance); }

Arity parse_arity(std::string_view t) { return parse_token(t, kArity, "arity"); }
RelationKind parse_kind(std::string_view t) { return parse_token(t, kKind, "kind"); }
Axis parse_axis(std::string_view t) { return parse_token(t, kAxis, "axis"); }
AlignMode parse_align_mode(std::string_view t) { return parse_token(t, kAlign, "align mode"); }
AnchorZone parse_anchor_zone(std::string_view t) { return parse_token(t, kZone, "anchor zone"); }
Provenance parse_provenance(std::string_view t) { return parse_token(t, kProvenance, "provenance"); }

void RelationDef::check() const {
    auto fail = [this](const std::string& why) { throw InvariantError("relation " + name + ": " + why); };
    if (name.empty()) throw InvariantError("relation with empty name");
    const ConstraintSpec& c = constraint;
    if (!(c.min_gap_frac >= 0.0 && c.min_gap_frac < c.max_gap_frac && c.max_gap_frac <= 1.0)) {
        fail("gap band must satisfy 0 <= min < max <= 1");
    }
    if (!(c.falloff_frac > 0.0) || !(c.align_slack_frac >= 0.0)) fail("falloff must be positive");
    if (!(validation.tolerance_frac >= 1.0)) fail("tolerance_frac must be >= 1");
    if (validation.max_adjustments < 0) fail("max_adjustments must be >= 0");
    if (revision < 0) fail("revision must be >= 0");
    if (rpc) {
        for (int v : *rpc) {
            if (v < -1 || v > 1) fail("rpc components must be in {-1, 0, 1}");
        }
    }
    switch (kind) {
        case RelationKind::Relative:
            if (arity != Arity::Binary) fail("relative relations are binary");
            if (!rpc) fail("relative relations need an rpc");
            if (c.require_overlap && c.overlap_axis == Axis::None) fail("overlap required but no overlap axis");
            break;
        case RelationKind::Anchoring:
            if (arity != Arity::Unary) fail("anchoring relations are unary");
            if (rpc) fail("unary relations carry no rpc");
            if (!c.anchor_zone) fail("anchoring relations need an anchor zone");
            break;
        case RelationKind::Alignment:
            if (arity != Arity::Nary) fail("alignment relations are n-ary");
            if (c.align_mode == AlignMode::None) fail("alignment relations need an align mode");
            break;
    }
}

std::string RelationInstance::to_string() const {
    std::ostringstream out;
    out << relation << '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out << ", ";
        out << '\'' << args[i] << '\'';
    }
    out << ')';
    return out.str();
}

void DiscretePoseSet::check() const {
    auto it = poses.find(anchor);
    if (it == poses.end() || it->second != LatticePoint{0, 0, 0}) {
        throw InvariantError("no anchor");
    }
}

const RelationDef* RelationLibrary::find(std::string_view name) const {
    auto it = entries_.find(name);
    return it == entries_.end() ? nullptr : &it->second.def;
}

const RelationDef& RelationLibrary::at(std::string_view name) const {
    if (const RelationDef* def = find(name)) return *def;
    throw LibraryError("missing relation: " + std::string(name));
}

Provenance RelationLibrary::provenance(std::string_view name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw LibraryError("missing relation: " + std::string(name));
    return it->second.provenance;
}

std::vector<std::string> RelationLibrary::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

void RelationLibrary::insert(RelationDef def, Provenance provenance) {
    def.check();
    if (entries_.count(def.name)) throw InvariantError("relation already present: " + def.name);
    std::string key = def.name;
    entries_.emplace(std::move(key), Entry{std::move(def), provenance});
}

void RelationLibrary::replace(RelationDef def, Provenance provenance) {
    def.check();
    auto it = entries_.find(def.name);
    if (it == entries_.end()) throw LibraryError("missing relation: " + def.name);
    it->second = Entry{std::move(def), provenance};
}

RelationLibrary builtin_library() {
    RelationLibrary lib;

    auto anchoring = [&](const char* name, AnchorZone zone, const char* text) {
        RelationDef d;
        d.name = name;
        d.arity = Arity::Unary;
        d.kind = RelationKind::Anchoring;
        d.definition = text;
        d.constraint.anchor_zone = zone;
        lib.insert(std::move(d), Provenance::Builtin);
    };
    anchoring("central_column", AnchorZone::CentralColumn,
              "Obj_A's center lies in the middle third of the surface along the x axis.");
    anchoring("near_front_edge", AnchorZone::NearFrontEdge,
              "Obj_A's front edge lies within the front 15% of the surface depth, close to the user.");
    anchoring("near_back_edge", AnchorZone::NearBackEdge,
              "Obj_A's back edge lies within the back 15% of the surface depth, away from the user.");
    anchoring("near_left_edge", AnchorZone::NearLeftEdge,
              "Obj_A's left edge lies within the leftmost 15% of the surface width.");
    anchoring("near_right_edge", AnchorZone::NearRightEdge,
              "Obj_A's right edge lies within the rightmost 15% of the surface width.");

    auto relative = [&](const char* name, Rpc rpc, Axis primary, Axis overlap, const char* text) {
        RelationDef d;
        d.name = name;
        d.arity = Arity::Binary;
        d.kind = RelationKind::Relative;
        d.definition = text;
        d.rpc = rpc;
        d.constraint.primary_axis = primary;
        d.constraint.overlap_axis = overlap;
        d.constraint.require_overlap = overlap != Axis::None;
        lib.insert(std::move(d), Provenance::Builtin);
    };
    relative("left_of", {-1, 0, 0}, Axis::X, Axis::Y,
             "Obj_A is immediately to the left of Obj_B along the x axis, separated by a small gap, "
             "with substantial y-overlap.");
    relative("right_of", {1, 0, 0}, Axis::X, Axis::Y,
             "Obj_A is immediately to the right of Obj_B along the x axis, separated by a small gap, "
             "with substantial y-overlap.");
    relative("above_of", {0, 1, 0}, Axis::Y, Axis::X,
             "Obj_A is immediately above Obj_B along the y axis (farther from the user), separated by a "
             "small gap, with substantial x-overlap.");
    relative("below_of", {0, -1, 0}, Axis::Y, Axis::X,
             "Obj_A is immediately below Obj_B along the y axis (closer to the user), separated by a small "
             "gap, with substantial x-overlap.");
    relative("right_above_of", {1, 1, 0}, Axis::XY, Axis::None,
             "Obj_A is immediately to the right of and above of Obj_B, viewed from the canonical camera "
             "frame. The left below side of Obj_A and the right top side of Obj_B are within a threshold.");
    relative("on_top_of", {0, 0, 1}, Axis::Z, Axis::XY,
             "Obj_A rests on the top face of Obj_B along the z axis, its footprint inside Obj_B's footprint.");
    relative("near_of", {0, 0, 0}, Axis::None, Axis::None,
             "Obj_A is close to Obj_B in any direction on the surface without touching it.");

    auto alignment = [&](const char* name, AlignMode mode, const char* text) {
        RelationDef d;
        d.name = name;
        d.arity = Arity::Nary;
        d.kind = RelationKind::Alignment;
        d.definition = text;
        d.constraint.align_mode = mode;
        d.constraint.falloff_frac = 0.02;
        lib.insert(std::move(d), Provenance::Builtin);
    };
    alignment("aligned_in_x_axis", AlignMode::CenterX,
              "The objects are placed in a row along the x axis with their volume centers sharing the same y.");
    alignment("aligned_in_y_axis", AlignMode::CenterY,
              "The objects are placed in a column along the y axis with their volume centers sharing the same x.");
    alignment("align_z-axis_at_center", AlignMode::CenterZ,
              "The objects are stacked along the z axis with their volume centers sharing the same x and y.");
    return lib;
}

void check_arity(const RelationInstance& instance, const RelationDef& def) {
    const std::size_t n = instance.args.size();
    bool ok = false;
    switch (def.arity) {
        case Arity::Unary: ok = n == 1; break;
        case Arity::Binary: ok = n == 2; break;
        case Arity::Nary: ok = n >= 2; break;
    }
    if (!ok) {
        throw LibraryError("arity mismatch: " + instance.to_string() + " for " + std::string(to_string(def.arity)) +
                           " relation");
    }
}

double score_plane(const RelationDef& def, std::span<const Aabb> boxes, double plane_w, double plane_h,
                   double widen) {
    switch (def.kind) {
        case RelationKind::Relative: return score_relative(def, boxes[0], boxes[1], plane_w, widen);
        case RelationKind::Anchoring: return score_anchor(def, boxes[0], plane_w, plane_h, widen);
        case RelationKind::Alignment: return score_alignment(def, boxes, plane_w, widen);
    }
    return 0.0;
}

double score(const RelationInstance& instance, const Layout& layout, const Boundary& boundary,
             const RelationLibrary& lib) {
    const RelationDef& def = lib.at(instance.relation);
    check_arity(instance, def);
    const PlaneFrame frame{boundary};
    const auto boxes = plane_boxes_for(instance, layout, frame);
    return score_plane(def, boxes, frame.plane_w, frame.plane_h);
}

bool validate_with_tolerance(const RelationDef& def, std::span<const Aabb> plane_boxes, double plane_w,
                             double plane_h, double tolerance) {
    return score_plane(def, plane_boxes, plane_w, plane_h, tolerance) >= 0.5;
}

bool validate(const RelationInstance& instance, const Layout& layout, const Boundary& boundary,
              const RelationLibrary& lib) {
    const RelationDef& def = lib.at(instance.relation);
    check_arity(instance, def);
    const PlaneFrame frame{boundary};
    const auto boxes = plane_boxes_for(instance, layout, frame);
    return validate_with_tolerance(def, boxes, frame.plane_w, frame.plane_h, def.validation.tolerance_frac);
}

bool discrete_check(const RelationInstance& instance, const DiscretePoseSet& discrete,
                    const RelationLibrary& lib) {
    const RelationDef& def = lib.at(instance.relation);
    check_arity(instance, def);
    std::vector<LatticePoint> points;
    points.reserve(instance.args.size());
    for (const auto& arg : instance.args) {
        auto it = discrete.poses.find(arg);
        if (it == discrete.poses.end()) {
            throw InvariantError("object missing from discrete poses: " + arg);
        }
        points.push_back(it->second);
    }
    switch (def.kind) {
        case RelationKind::Anchoring: return true;
        case RelationKind::Relative: {
            const Rpc& rpc = *def.rpc;
            for (int axis = 0; axis < 3; ++axis) {
                if (rpc[axis] == 0) continue;
                if (sign_of(points[0][axis] - points[1][axis]) != rpc[axis]) return false;
            }
            return true;
        }
        case RelationKind::Alignment: {
            std::vector<int> shared;
            switch (def.constraint.align_mode) {
                case AlignMode::CenterX: shared = {1}; break;
                case AlignMode::CenterY: shared = {0}; break;
                case AlignMode::CenterZ: shared = {0, 1}; break;
                case AlignMode::None: break;
            }
            for (int axis : shared) {
                for (const auto& p : points) {
                    if (p[axis] != points[0][axis]) return false;
                }
            }
            return true;
        }
    }
    return false;
}

FailureEvidence diagnose_failure(const RelationInstance& instance, const Layout& layout,
                                 const Boundary& boundary, const RelationLibrary& lib) {
    const RelationDef& def = lib.at(instance.relation);
    check_arity(instance, def);
    const PlaneFrame frame{boundary};
    const auto boxes = plane_boxes_for(instance, layout, frame);

    FailureEvidence ev;
    std::ostringstream excerpt;
    excerpt << instance.to_string() << " score=" << score_plane(def, boxes, frame.plane_w, frame.plane_h);
    if (def.kind == RelationKind::Relative) {
        const Rpc& rpc = *def.rpc;
        const double hi = def.constraint.max_gap_frac * frame.plane_w * def.validation.tolerance_frac;
        for (int axis = 0; axis < 2; ++axis) {
            if (rpc[axis] == 0) continue;
            const double gap = directed_gap(boxes[0], boxes[1], axis, rpc[axis]);
            excerpt << " gap_" << (axis == 0 ? 'x' : 'y') << "=" << gap << "px";
            if (gap > hi) ev.kind = FailureKind::GapOverflow;
        }
        if (rpc == Rpc{0, 0, 0} && edge_distance(boxes[0], boxes[1]) > hi) ev.kind = FailureKind::GapOverflow;
    }
    ev.excerpt = excerpt.str();
    return ev;
}

RelationDef adjust_parameters(const RelationDef& entry, const FailureEvidence& evidence) {
    if (entry.revision >= entry.validation.max_adjustments) {
        throw AdjustmentLimitError("adjustment limit: " + entry.name + " already adjusted " +
                                   std::to_string(entry.revision) + " times");
    }
    RelationDef next = entry;
    if (evidence.kind == FailureKind::GapOverflow) {
        next.constraint.max_gap_frac = std::min(1.0, entry.constraint.max_gap_frac * 1.25);
    } else {
        next.validation.tolerance_frac = entry.validation.tolerance_frac * 1.25;
    }
    next.revision = entry.revision + 1;
    return next;
}

}  // namespace layoutforge
