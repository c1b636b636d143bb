#pragma once

// Behavior-tree node model and tick propagation.
//
// Control nodes (fallback, sequence) are memory-less: every root tick starts
// from the leftmost child. Leaves are resolved through the tick context, which
// is what lets the PHAST engine and plain test harnesses share this code.

#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace phast::bt {

enum class NodeStatus { Success, Failure, Running, Idle };

std::string_view to_string(NodeStatus status);
std::optional<NodeStatus> status_from_string(std::string_view text);

enum class NodeKind { Fallback, Sequence, Condition, Action };

std::string_view to_string(NodeKind kind);

inline bool is_control(NodeKind kind) {
    return kind == NodeKind::Fallback || kind == NodeKind::Sequence;
}

struct Node {
    NodeKind kind = NodeKind::Action;
    std::string label;
    std::vector<Node> children;
    /// Index into the owner's leaf table; leaves only.
    std::optional<std::size_t> binding;
    /// Pre-order position, assigned by Tree.
    std::size_t index = 0;

    static Node fallback(std::string label, std::vector<Node> children);
    static Node sequence(std::string label, std::vector<Node> children);
    static Node condition(std::string label, std::optional<std::size_t> binding);
    static Node action(std::string label, std::optional<std::size_t> binding);
};

class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An indexed tree. Construction checks the generic node invariants
/// (control nodes have children, leaves have none, labels are unique) and
/// assigns pre-order indices.
class Tree {
public:
    explicit Tree(Node root);

    const Node& root() const { return root_; }
    std::size_t size() const { return labels_.size(); }
    /// Labels in pre-order.
    const std::vector<std::string>& labels() const { return labels_; }

private:
    Node root_;
    std::vector<std::string> labels_;
};

using LedgerEntries = std::vector<std::pair<std::string, NodeStatus>>;

/// Per-tick record of node statuses, addressed by pre-order index.
class StatusLedger {
public:
    explicit StatusLedger(const Tree& tree);

    void reset();
    void record(const Node& node, NodeStatus status);
    NodeStatus status(std::size_t index) const { return statuses_.at(index); }
    std::size_t size() const { return statuses_.size(); }

    /// (label, status) for every node in pre-order.
    LedgerEntries entries() const;

private:
    const std::vector<std::string>* labels_;
    std::vector<NodeStatus> statuses_;
};

template <typename Context>
concept TickContext = requires(Context& ctx, const Node& leaf) {
    { ctx.evaluate_leaf(leaf) } -> std::same_as<NodeStatus>;
    { ctx.ledger() } -> std::same_as<StatusLedger&>;
};

template <TickContext Context>
NodeStatus tick_node(const Node& node, Context& ctx);

template <TickContext Context>
NodeStatus tick_sequence(std::span<const Node> children, Context& ctx) {
    for (const Node& child : children) {
        const NodeStatus status = tick_node(child, ctx);
        if (status != NodeStatus::Success) {
            return status;
        }
    }
    return NodeStatus::Success;
}

template <TickContext Context>
NodeStatus tick_fallback(std::span<const Node> children, Context& ctx) {
    for (const Node& child : children) {
        const NodeStatus status = tick_node(child, ctx);
        if (status != NodeStatus::Failure) {
            return status;
        }
    }
    return NodeStatus::Failure;
}

template <TickContext Context>
NodeStatus tick_node(const Node& node, Context& ctx) {
    NodeStatus status = NodeStatus::Failure;
    switch (node.kind) {
        case NodeKind::Sequence:
            status = tick_sequence(std::span<const Node>(node.children), ctx);
            break;
        case NodeKind::Fallback:
            status = tick_fallback(std::span<const Node>(node.children), ctx);
            break;
        case NodeKind::Condition:
        case NodeKind::Action:
            if (!node.binding) {
                throw ConfigurationError("leaf '" + node.label + "' has no binding");
            }
            status = ctx.evaluate_leaf(node);
            break;
    }
    ctx.ledger().record(node, status);
    return status;
}

/// Resets the ledger, then ticks the root.
template <TickContext Context>
NodeStatus tick_root(const Tree& tree, Context& ctx) {
    ctx.ledger().reset();
    return tick_node(tree.root(), ctx);
}

}  // namespace phast::bt
