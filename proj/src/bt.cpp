#include "phast/bt.hpp"

#include <algorithm>
#include <unordered_set>

namespace phast::bt {

std::string_view to_string(NodeStatus status) {
    switch (status) {
        case NodeStatus::Success:
            return "SUCCESS";
        case NodeStatus::Failure:
            return "FAILURE";
        case NodeStatus::Running:
            return "RUNNING";
        case NodeStatus::Idle:
            return "IDLE";
    }
    return "IDLE";
}

std::optional<NodeStatus> status_from_string(std::string_view text) {
    for (NodeStatus s :
         {NodeStatus::Success, NodeStatus::Failure, NodeStatus::Running, NodeStatus::Idle}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    return std::nullopt;
}

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Fallback:
            return "fallback";
        case NodeKind::Sequence:
            return "sequence";
        case NodeKind::Condition:
            return "condition";
        case NodeKind::Action:
            return "action";
    }
    return "action";
}

Node Node::fallback(std::string label, std::vector<Node> children) {
    return Node{NodeKind::Fallback, std::move(label), std::move(children), std::nullopt, 0};
}

Node Node::sequence(std::string label, std::vector<Node> children) {
    return Node{NodeKind::Sequence, std::move(label), std::move(children), std::nullopt, 0};
}

Node Node::condition(std::string label, std::optional<std::size_t> binding) {
    return Node{NodeKind::Condition, std::move(label), {}, binding, 0};
}

Node Node::action(std::string label, std::optional<std::size_t> binding) {
    return Node{NodeKind::Action, std::move(label), {}, binding, 0};
}

namespace {

void index_preorder(Node& node, std::vector<std::string>& labels,
                    std::unordered_set<std::string>& seen) {
    if (is_control(node.kind) && node.children.empty()) {
        throw ConfigurationError("control node '" + node.label + "' has no children");
    }
    if (!is_control(node.kind) && !node.children.empty()) {
        throw ConfigurationError("leaf '" + node.label + "' has children");
    }
    if (!seen.insert(node.label).second) {
        throw ConfigurationError("duplicate node label '" + node.label + "'");
    }
    node.index = labels.size();
    labels.push_back(node.label);
    for (Node& child : node.children) {
        index_preorder(child, labels, seen);
    }
}

}  // namespace

Tree::Tree(Node root) : root_(std::move(root)) {
    std::unordered_set<std::string> seen;
    index_preorder(root_, labels_, seen);
}

StatusLedger::StatusLedger(const Tree& tree)
    : labels_(&tree.labels()), statuses_(tree.size(), NodeStatus::Idle) {}

void StatusLedger::reset() { std::fill(statuses_.begin(), statuses_.end(), NodeStatus::Idle); }

void StatusLedger::record(const Node& node, NodeStatus status) { statuses_.at(node.index) = status; }

LedgerEntries StatusLedger::entries() const {
    LedgerEntries out;
    out.reserve(statuses_.size());
    for (std::size_t i = 0; i < statuses_.size(); ++i) {
        out.emplace_back((*labels_)[i], statuses_[i]);
    }
    return out;
}

}  // namespace phast::bt
