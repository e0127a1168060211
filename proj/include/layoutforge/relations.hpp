#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layoutforge/discrete.hpp"
#include "layoutforge/geometry.hpp"

namespace layoutforge {

class Gateway;

enum class Arity { Unary, Binary, Nary };
enum class RelationKind { Anchoring, Relative, Alignment };
enum class Axis { None, X, Y, Z, XY };

// Alignment line direction: center_x means the objects lie on a line parallel
// to x and share their y centers; center_z shares both x and y centers.
enum class AlignMode { None, CenterX, CenterY, CenterZ };

enum class AnchorZone { CentralColumn, CentralRow, NearFrontEdge, NearBackEdge, NearLeftEdge, NearRightEdge };

enum class Provenance { Builtin, LlmSynthesized, Adjusted };

std::string_view to_string(Arity v);
std::string_view to_string(RelationKind v);
std::string_view to_string(Axis v);
std::string_view to_string(AlignMode v);
std::string_view to_string(AnchorZone v);
std::string_view to_string(Provenance v);

// Parsers throw SchemaError naming the offending token.
Arity parse_arity(std::string_view token);
RelationKind parse_kind(std::string_view token);
Axis parse_axis(std::string_view token);
AlignMode parse_align_mode(std::string_view token);
AnchorZone parse_anchor_zone(std::string_view token);
Provenance parse_provenance(std::string_view token);

// Declarative replacement for generated constraint code. All distances are
// fractions of the plane width.
struct ConstraintSpec {
    Axis primary_axis = Axis::None;
    double min_gap_frac = 0.01;
    double max_gap_frac = 0.06;
    Axis overlap_axis = Axis::None;
    bool require_overlap = false;
    AlignMode align_mode = AlignMode::None;
    std::optional<AnchorZone> anchor_zone;
    double falloff_frac = 0.05;
    double align_slack_frac = 0.005;

    friend bool operator==(const ConstraintSpec&, const ConstraintSpec&) = default;
};

struct ValidationSpec {
    double tolerance_frac = 1.5;
    int max_adjustments = 3;

    friend bool operator==(const ValidationSpec&, const ValidationSpec&) = default;
};

using Rpc = std::array<int, 3>;

struct RelationDef {
    std::string name;
    Arity arity = Arity::Binary;
    RelationKind kind = RelationKind::Relative;
    std::string definition;
    std::optional<Rpc> rpc;
    ConstraintSpec constraint;
    ValidationSpec validation;
    int revision = 0;

    // Throws InvariantError when the entry cannot be compiled into a scorer.
    void check() const;

    friend bool operator==(const RelationDef&, const RelationDef&) = default;
};

struct RelationInstance {
    std::string relation;
    std::vector<std::string> args;

    // Canonical text form, e.g. left_of('fork', 'plate').
    std::string to_string() const;

    friend bool operator==(const RelationInstance&, const RelationInstance&) = default;
    friend auto operator<=>(const RelationInstance&, const RelationInstance&) = default;
};

class RelationLibrary {
  public:
    struct Entry {
        RelationDef def;
        Provenance provenance = Provenance::Builtin;

        friend bool operator==(const Entry&, const Entry&) = default;
    };

    const RelationDef* find(std::string_view name) const;
    // Throws LibraryError("missing relation: <name>").
    const RelationDef& at(std::string_view name) const;
    Provenance provenance(std::string_view name) const;

    bool contains(std::string_view name) const { return find(name) != nullptr; }
    std::size_t size() const { return entries_.size(); }
    std::vector<std::string> names() const;
    const std::map<std::string, Entry, std::less<>>& entries() const { return entries_; }

    // Adds a new entry; throws InvariantError on duplicates or uncompilable entries.
    void insert(RelationDef def, Provenance provenance);
    // Replaces an existing entry.
    void replace(RelationDef def, Provenance provenance);

    friend bool operator==(const RelationLibrary&, const RelationLibrary&) = default;

  private:
    std::map<std::string, Entry, std::less<>> entries_;
};

RelationLibrary builtin_library();

// Checks the argument count of an instance against its entry.
void check_arity(const RelationInstance& instance, const RelationDef& def);

// Scores boxes already expressed in plane pixels (z in cm). `widen` >= 1
// loosens every threshold; 1 is the constraint itself.
double score_plane(const RelationDef& def, std::span<const Aabb> boxes, double plane_w, double plane_h,
                   double widen = 1.0);

double score(const RelationInstance& instance, const Layout& layout, const Boundary& boundary,
             const RelationLibrary& lib);

bool validate(const RelationInstance& instance, const Layout& layout, const Boundary& boundary,
              const RelationLibrary& lib);

// Same decision rule as validate() with an explicit tolerance.
bool validate_with_tolerance(const RelationDef& def, std::span<const Aabb> plane_boxes, double plane_w,
                             double plane_h, double tolerance);

bool discrete_check(const RelationInstance& instance, const DiscretePoseSet& discrete,
                    const RelationLibrary& lib);

enum class FailureKind { GapOverflow, OverlapShortfall };

struct FailureEvidence {
    FailureKind kind = FailureKind::OverlapShortfall;
    std::string excerpt;
};

// Classifies why an instance failed on a layout.
FailureEvidence diagnose_failure(const RelationInstance& instance, const Layout& layout,
                                 const Boundary& boundary, const RelationLibrary& lib);

RelationDef adjust_parameters(const RelationDef& entry, const FailureEvidence& evidence);

// Asks the gateway to define, constrain and validate a new relation name.
RelationDef synthesize_relation(const std::string& name, const std::string& context, Gateway& gateway,
                                const RelationLibrary& lib);

void save_library(const RelationLibrary& lib, const std::filesystem::path& path);
RelationLibrary load_library(const std::filesystem::path& path);
std::string library_to_json(const RelationLibrary& lib);
RelationLibrary library_from_json(const std::string& text);

}  // namespace layoutforge
