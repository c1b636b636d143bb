#pragma once

// PHAST trees: a fallback root, one sequence per phase, and condition leaves
// followed by shared-control action leaves. validate() enforces that shape;
// tick() runs one input step through it.

#include "phast/bt.hpp"
#include "phast/geometry.hpp"
#include "phast/world.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace phast {

enum class ConditionKind { DistanceLeq, DistanceGeq, DistanceLt, DistanceGt, TiltLeq, TiltGt };

std::string_view to_string(ConditionKind kind);
std::optional<ConditionKind> condition_kind_from_string(std::string_view text);

inline bool is_distance(ConditionKind kind) {
    return kind != ConditionKind::TiltLeq && kind != ConditionKind::TiltGt;
}

struct ConditionSpec {
    std::string label;
    ConditionKind kind = ConditionKind::DistanceLeq;
    std::string subject;
    /// Distance kinds only.
    std::string reference;
    /// Meters for distance kinds, degrees for tilt kinds.
    double threshold = 0.0;

    friend bool operator==(const ConditionSpec&, const ConditionSpec&) = default;
};

inline constexpr double kDefaultTranslationGain = 0.5;  // m/s per unit input
inline constexpr double kDefaultRotationGain = 0.5;     // rad/s per unit input

/// Moves `subject` along the line towards `target`.
struct ProjectToScan {
    std::string subject;
    std::string target;
    double gain = kDefaultTranslationGain;

    friend bool operator==(const ProjectToScan&, const ProjectToScan&) = default;
};

/// Rotates `subject` about its `pivot` anchor. The axis is built from the
/// reference object's origin, its `reference_anchor`, and the subject origin.
struct RotationScan {
    std::string subject;
    std::string pivot;
    std::string reference;
    std::string reference_anchor;
    Axis input = Axis::Y;
    double gain = kDefaultRotationGain;

    friend bool operator==(const RotationScan&, const RotationScan&) = default;
};

struct ScanSpec {
    std::string label;
    std::variant<ProjectToScan, RotationScan> action;

    friend bool operator==(const ScanSpec&, const ScanSpec&) = default;
};

using LeafSpec = std::variant<ConditionSpec, ScanSpec>;

struct Phase {
    std::string name;
    std::vector<ConditionSpec> conditions;
    std::vector<ScanSpec> actions;

    friend bool operator==(const Phase&, const Phase&) = default;
};

enum class Rule {
    RootNotFallback,
    NoPhases,
    PhaseNotSequence,
    DepthExceeded,
    ActionBeforeCondition,
    NoActions,
    DuplicateLabel,
    UnboundLeaf,
    BindingMismatch,
    UnknownObject,
    UnknownAnchor,
};

std::string_view to_string(Rule rule);

struct Violation {
    Rule rule;
    std::string label;
    std::string message;
    /// Key of the offending field in the leaf, for reference violations.
    std::string field = {};
};

struct ValidationResult;

class PhastTree {
public:
    /// Builds the canonical node layout for `phases` and validates it.
    /// Throws bt::ConfigurationError listing the violations on failure.
    static PhastTree from_phases(std::string root_label, std::vector<Phase> phases);

    const bt::Tree& tree() const { return tree_; }
    const std::string& root_label() const { return tree_.root().label; }
    const std::vector<Phase>& phases() const { return phases_; }
    const LeafSpec& leaf(std::size_t binding) const { return leaves_.at(binding); }
    /// Pre-order index of phase i's sequence node.
    std::size_t phase_node_index(std::size_t phase) const { return phase_nodes_.at(phase); }

private:
    PhastTree(bt::Tree tree, std::vector<LeafSpec> leaves, std::vector<Phase> phases,
              std::vector<std::size_t> phase_nodes);

    friend ValidationResult validate(const bt::Node& candidate, std::vector<LeafSpec> leaves);

    bt::Tree tree_;
    std::vector<LeafSpec> leaves_;
    std::vector<Phase> phases_;
    std::vector<std::size_t> phase_nodes_;
};

struct ValidationResult {
    std::optional<PhastTree> tree;
    std::vector<Violation> violations;

    explicit operator bool() const { return tree.has_value(); }
};

/// Structural check of a candidate tree whose leaves bind into `leaves`.
/// Never throws for malformed input; every broken rule becomes a Violation.
ValidationResult validate(const bt::Node& candidate, std::vector<LeafSpec> leaves);

/// Objects and anchors named by one leaf that are missing from `world`.
std::vector<Violation> check_references(const LeafSpec& leaf, const WorldState& world);

/// check_references over every leaf of the tree.
std::vector<Violation> check_references(const PhastTree& tree, const WorldState& world);

enum class FallthroughMode { PassThrough, Hold };

std::string_view to_string(FallthroughMode mode);
std::optional<FallthroughMode> fallthrough_from_string(std::string_view text);

struct TickOptions {
    FallthroughMode fallthrough = FallthroughMode::PassThrough;
    double pass_through_gain = kDefaultTranslationGain;
};

struct TickResult {
    WorldState world;
    TickSnapshot snapshot;
};

bool condition_holds(const ConditionSpec& condition, const WorldState& world);

/// Computes the next world from the current one and the user input. The
/// returned world has tick_index advanced by one; the snapshot carries the
/// index of the executed tick.
TickResult tick(const PhastTree& tree, const WorldState& world, const UserInput& u,
                const TickOptions& options = {});

/// Phase the next tick would execute, if any.
std::optional<std::string> active_phase(const PhastTree& tree, const WorldState& world);

/// Owns a tree and a mutable world; the unit driven by replay and serve.
class Engine {
public:
    Engine(PhastTree tree, WorldState initial, TickOptions options = {});

    TickSnapshot step(const UserInput& u);
    void reset();

    void set_fallthrough(FallthroughMode mode) { options_.fallthrough = mode; }
    const TickOptions& options() const { return options_; }
    const PhastTree& tree() const { return tree_; }
    const WorldState& world() const { return world_; }
    const WorldState& initial_world() const { return initial_; }

private:
    PhastTree tree_;
    WorldState initial_;
    WorldState world_;
    TickOptions options_;
};

}  // namespace phast
