#include "phast/engine.hpp"

#include <array>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace phast {

namespace {

constexpr std::array<std::pair<ConditionKind, std::string_view>, 6> kConditionNames{{
    {ConditionKind::DistanceLeq, "distance_leq"},
    {ConditionKind::DistanceGeq, "distance_geq"},
    {ConditionKind::DistanceLt, "distance_lt"},
    {ConditionKind::DistanceGt, "distance_gt"},
    {ConditionKind::TiltLeq, "tilt_leq"},
    {ConditionKind::TiltGt, "tilt_gt"},
}};

}  // namespace

std::string_view to_string(ConditionKind kind) {
    for (const auto& [k, name] : kConditionNames) {
        if (k == kind) {
            return name;
        }
    }
    return "distance_leq";
}

std::optional<ConditionKind> condition_kind_from_string(std::string_view text) {
    for (const auto& [k, name] : kConditionNames) {
        if (name == text) {
            return k;
        }
    }
    return std::nullopt;
}

std::string_view to_string(Rule rule) {
    switch (rule) {
        case Rule::RootNotFallback:
            return "root-not-fallback";
        case Rule::NoPhases:
            return "no-phases";
        case Rule::PhaseNotSequence:
            return "phase-not-sequence";
        case Rule::DepthExceeded:
            return "depth-exceeded";
        case Rule::ActionBeforeCondition:
            return "action-before-condition";
        case Rule::NoActions:
            return "no-actions";
        case Rule::DuplicateLabel:
            return "duplicate-label";
        case Rule::UnboundLeaf:
            return "unbound-leaf";
        case Rule::BindingMismatch:
            return "binding-mismatch";
        case Rule::UnknownObject:
            return "unknown-object";
        case Rule::UnknownAnchor:
            return "unknown-anchor";
    }
    return "unknown";
}

std::string_view to_string(FallthroughMode mode) {
    return mode == FallthroughMode::Hold ? "hold" : "pass_through";
}

std::optional<FallthroughMode> fallthrough_from_string(std::string_view text) {
    if (text == "pass_through") {
        return FallthroughMode::PassThrough;
    }
    if (text == "hold") {
        return FallthroughMode::Hold;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Structure

PhastTree::PhastTree(bt::Tree tree, std::vector<LeafSpec> leaves, std::vector<Phase> phases,
                     std::vector<std::size_t> phase_nodes)
    : tree_(std::move(tree)),
      leaves_(std::move(leaves)),
      phases_(std::move(phases)),
      phase_nodes_(std::move(phase_nodes)) {}

namespace {

void collect_duplicates(const bt::Node& node, std::unordered_set<std::string>& seen,
                        std::vector<Violation>& out) {
    if (!seen.insert(node.label).second) {
        out.push_back({Rule::DuplicateLabel, node.label, "label '" + node.label + "' is not unique"});
    }
    for (const bt::Node& child : node.children) {
        collect_duplicates(child, seen, out);
    }
}

}  // namespace

ValidationResult validate(const bt::Node& candidate, std::vector<LeafSpec> leaves) {
    std::vector<Violation> violations;

    std::unordered_set<std::string> seen;
    collect_duplicates(candidate, seen, violations);

    if (candidate.kind != bt::NodeKind::Fallback) {
        violations.push_back({Rule::RootNotFallback, candidate.label, "root must be fallback"});
    }
    if (candidate.children.empty()) {
        violations.push_back({Rule::NoPhases, candidate.label, "no phases defined"});
    }

    std::vector<Phase> phases;
    for (const bt::Node& phase_node : candidate.children) {
        if (phase_node.kind != bt::NodeKind::Sequence) {
            violations.push_back({Rule::PhaseNotSequence, phase_node.label,
                                  "phase '" + phase_node.label + "' must be a sequence, not " +
                                      std::string(bt::to_string(phase_node.kind))});
        }

        Phase phase;
        phase.name = phase_node.label;
        bool seen_action = false;
        bool bad_child = false;
        for (const bt::Node& leaf : phase_node.children) {
            if (bt::is_control(leaf.kind) || !leaf.children.empty()) {
                violations.push_back({Rule::DepthExceeded, leaf.label,
                                      "depth exceeds three levels at '" + leaf.label + "'"});
                bad_child = true;
                continue;
            }
            if (!leaf.binding || *leaf.binding >= leaves.size()) {
                violations.push_back(
                    {Rule::UnboundLeaf, leaf.label, "leaf '" + leaf.label + "' has no binding"});
                bad_child = true;
                continue;
            }
            LeafSpec& spec = leaves[*leaf.binding];
            if (leaf.kind == bt::NodeKind::Condition) {
                auto* condition = std::get_if<ConditionSpec>(&spec);
                if (!condition) {
                    violations.push_back({Rule::BindingMismatch, leaf.label,
                                          "condition '" + leaf.label + "' bound to an action"});
                    bad_child = true;
                    continue;
                }
                if (seen_action) {
                    violations.push_back({Rule::ActionBeforeCondition, leaf.label,
                                          "condition '" + leaf.label + "' follows an action"});
                }
                condition->label = leaf.label;
                phase.conditions.push_back(*condition);
            } else {
                auto* scan = std::get_if<ScanSpec>(&spec);
                if (!scan) {
                    violations.push_back({Rule::BindingMismatch, leaf.label,
                                          "action '" + leaf.label + "' bound to a condition"});
                    bad_child = true;
                    continue;
                }
                seen_action = true;
                scan->label = leaf.label;
                phase.actions.push_back(*scan);
            }
        }
        // A phase whose actions were rejected above is not also reported as empty.
        if (phase_node.kind == bt::NodeKind::Sequence && phase.actions.empty() && !bad_child) {
            violations.push_back({Rule::NoActions, phase_node.label,
                                  "phase '" + phase_node.label + "' has no actions"});
        }
        phases.push_back(std::move(phase));
    }
    if (!violations.empty()) {
        return {std::nullopt, std::move(violations)};
    }

    bt::Tree tree(candidate);
    std::vector<std::size_t> phase_nodes;
    for (const bt::Node& phase_node : tree.root().children) {
        phase_nodes.push_back(phase_node.index);
    }
    return {PhastTree(std::move(tree), std::move(leaves), std::move(phases), std::move(phase_nodes)),
            {}};
}

PhastTree PhastTree::from_phases(std::string root_label, std::vector<Phase> phases) {
    std::vector<LeafSpec> leaves;
    std::vector<bt::Node> phase_nodes;
    for (const Phase& phase : phases) {
        std::vector<bt::Node> children;
        for (const ConditionSpec& c : phase.conditions) {
            children.push_back(bt::Node::condition(c.label, leaves.size()));
            leaves.emplace_back(c);
        }
        for (const ScanSpec& a : phase.actions) {
            children.push_back(bt::Node::action(a.label, leaves.size()));
            leaves.emplace_back(a);
        }
        phase_nodes.push_back(bt::Node::sequence(phase.name, std::move(children)));
    }
    ValidationResult result =
        validate(bt::Node::fallback(std::move(root_label), std::move(phase_nodes)), std::move(leaves));
    if (!result) {
        std::string message = "invalid PHAST tree:";
        for (const Violation& v : result.violations) {
            message += " [" + std::string(to_string(v.rule)) + "] " + v.message + ";";
        }
        throw bt::ConfigurationError(message);
    }
    return std::move(*result.tree);
}

std::vector<Violation> check_references(const LeafSpec& leaf, const WorldState& world) {
    std::vector<Violation> out;
    const auto need_object = [&](const std::string& label, const std::string& name,
                                 const char* field) {
        if (!world.objects.contains(name)) {
            out.push_back({Rule::UnknownObject, label, "unknown object '" + name + "'", field});
            return false;
        }
        return true;
    };
    const auto need_anchor = [&](const std::string& label, const std::string& obj,
                                 const char* obj_field, const std::string& anchor,
                                 const char* anchor_field) {
        if (need_object(label, obj, obj_field) && !world.objects.at(obj).anchors.contains(anchor)) {
            out.push_back({Rule::UnknownAnchor, label,
                           "unknown anchor '" + anchor + "' on object '" + obj + "'", anchor_field});
        }
    };

    if (const auto* c = std::get_if<ConditionSpec>(&leaf)) {
        need_object(c->label, c->subject, "subject");
        if (is_distance(c->kind)) {
            need_object(c->label, c->reference, "reference");
        }
        return out;
    }
    const auto& scan = std::get<ScanSpec>(leaf);
    if (const auto* p = std::get_if<ProjectToScan>(&scan.action)) {
        need_object(scan.label, p->subject, "subject");
        need_object(scan.label, p->target, "target");
    } else {
        const auto& r = std::get<RotationScan>(scan.action);
        need_anchor(scan.label, r.subject, "subject", r.pivot, "pivot");
        need_anchor(scan.label, r.reference, "reference", r.reference_anchor, "reference_anchor");
    }
    return out;
}

std::vector<Violation> check_references(const PhastTree& tree, const WorldState& world) {
    std::vector<Violation> out;
    const auto append = [&](const LeafSpec& leaf) {
        auto found = check_references(leaf, world);
        out.insert(out.end(), found.begin(), found.end());
    };
    for (const Phase& phase : tree.phases()) {
        for (const ConditionSpec& c : phase.conditions) {
            append(c);
        }
        for (const ScanSpec& a : phase.actions) {
            append(a);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ticking

bool condition_holds(const ConditionSpec& c, const WorldState& world) {
    const ObjectState& subject = object(world, c.subject);
    double value = 0.0;
    if (is_distance(c.kind)) {
        value = distance(subject.pose.position, object(world, c.reference).pose.position);
    } else {
        value = tilt_degrees(subject.pose.orientation, subject.longitudinal_axis);
    }
    switch (c.kind) {
        case ConditionKind::DistanceLeq:
        case ConditionKind::TiltLeq:
            return value <= c.threshold;
        case ConditionKind::DistanceGeq:
            return value >= c.threshold;
        case ConditionKind::DistanceLt:
            return value < c.threshold;
        case ConditionKind::DistanceGt:
        case ConditionKind::TiltGt:
            return value > c.threshold;
    }
    return false;
}

namespace {

/// Applies one action node to `world`. Geometric degeneracy leaves the world
/// untouched and is reported through the return value.
bool run_scan(const ScanSpec& scan, WorldState& world, const UserInput& u) {
    try {
        if (const auto* p = std::get_if<ProjectToScan>(&scan.action)) {
            const ObjectState& subject = object(world, p->subject);
            const Vec3 l_b = subject.pose.position;
            const Vec3 l_c = object(world, p->target).pose.position;
            const Vec3 l_u = commanded_point(l_b, u, p->gain, world.dt);
            const Vec3 next = project_to(l_b, l_c, l_u);
            world = apply_pose(world, p->subject, Pose{next, subject.pose.orientation});
            return false;
        }
        const auto& r = std::get<RotationScan>(scan.action);
        const ObjectState& subject = object(world, r.subject);
        const double theta = input_to_angle(u, r.input, r.gain, world.dt);
        const Vec3 axis = rotation_axis(object(world, r.reference).pose.position,
                                        subject.pose.position,
                                        anchor_world(world, r.reference, r.reference_anchor));
        const Vec3 pivot = anchor_world(world, r.subject, r.pivot);
        world = apply_pose(world, r.subject, rotate_about_pivot(subject.pose, pivot, axis, theta));
        return false;
    } catch (const GeometryError& e) {
        if (e.kind() == GeometryError::Kind::DegenerateLine ||
            e.kind() == GeometryError::Kind::DegenerateAxis) {
            return true;
        }
        throw;
    }
}

class PhastContext {
public:
    PhastContext(const PhastTree& tree, WorldState world, const UserInput& u)
        : tree_(tree), world_(std::move(world)), input_(u), ledger_(tree.tree()) {}

    bt::NodeStatus evaluate_leaf(const bt::Node& leaf) {
        const LeafSpec& spec = tree_.leaf(*leaf.binding);
        if (const auto* c = std::get_if<ConditionSpec>(&spec)) {
            return condition_holds(*c, world_) ? bt::NodeStatus::Success : bt::NodeStatus::Failure;
        }
        degenerate_ = run_scan(std::get<ScanSpec>(spec), world_, input_) || degenerate_;
        return bt::NodeStatus::Success;
    }

    bt::StatusLedger& ledger() { return ledger_; }
    WorldState& world() { return world_; }
    bool degenerate() const { return degenerate_; }

private:
    const PhastTree& tree_;
    WorldState world_;
    UserInput input_;
    bt::StatusLedger ledger_;
    bool degenerate_ = false;
};

static_assert(bt::TickContext<PhastContext>);

}  // namespace

TickResult tick(const PhastTree& tree, const WorldState& world, const UserInput& u,
                const TickOptions& options) {
    if (!is_finite(u)) {
        throw std::invalid_argument("tick: non-finite user input");
    }
    PhastContext ctx(tree, world, u);
    const bt::NodeStatus root = bt::tick_root(tree.tree(), ctx);

    std::optional<std::string> active;
    for (std::size_t i = 0; i < tree.phases().size(); ++i) {
        if (ctx.ledger().status(tree.phase_node_index(i)) == bt::NodeStatus::Success) {
            active = tree.phases()[i].name;
            break;
        }
    }

    WorldState& next = ctx.world();
    if (root == bt::NodeStatus::Failure && options.fallthrough == FallthroughMode::PassThrough &&
        next.held_object) {
        const ObjectState& held = object(next, *next.held_object);
        const Vec3 moved =
            commanded_point(held.pose.position, u, options.pass_through_gain, next.dt);
        next = apply_pose(next, held.name, Pose{moved, held.pose.orientation});
    }

    TickSnapshot snap = snapshot(next, ctx.ledger().entries(), active, u, ctx.degenerate());
    next.tick_index += 1;
    return {std::move(next), std::move(snap)};
}

std::optional<std::string> active_phase(const PhastTree& tree, const WorldState& world) {
    for (const Phase& phase : tree.phases()) {
        bool all = true;
        for (const ConditionSpec& c : phase.conditions) {
            if (!condition_holds(c, world)) {
                all = false;
                break;
            }
        }
        if (all) {
            return phase.name;
        }
    }
    return std::nullopt;
}

Engine::Engine(PhastTree tree, WorldState initial, TickOptions options)
    : tree_(std::move(tree)), initial_(initial), world_(std::move(initial)), options_(options) {
    const auto violations = check_references(tree_, world_);
    if (!violations.empty()) {
        throw bt::ConfigurationError("engine: " + violations.front().message);
    }
}

TickSnapshot Engine::step(const UserInput& u) {
    TickResult result = tick(tree_, world_, u, options_);
    world_ = std::move(result.world);
    return std::move(result.snapshot);
}

void Engine::reset() { world_ = initial_; }

}  // namespace phast
