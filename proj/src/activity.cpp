#include "phast/activity.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <initializer_list>
#include <set>
#include <sstream>
#include <tuple>

namespace phast {

std::string_view to_string(DiagnosticCode code) {
    switch (code) {
        case DiagnosticCode::Encoding:
            return "encoding";
        case DiagnosticCode::Syntax:
            return "syntax";
        case DiagnosticCode::Version:
            return "version";
        case DiagnosticCode::MissingField:
            return "missing-field";
        case DiagnosticCode::UnknownKey:
            return "unknown-key";
        case DiagnosticCode::DuplicateKey:
            return "duplicate-key";
        case DiagnosticCode::WrongType:
            return "wrong-type";
        case DiagnosticCode::InvalidValue:
            return "invalid-value";
        case DiagnosticCode::Unit:
            return "unit";
        case DiagnosticCode::NoPhases:
            return "no-phases";
        case DiagnosticCode::UnknownNodeKind:
            return "unknown-node-kind";
        case DiagnosticCode::UnknownConditionKind:
            return "unknown-condition-kind";
        case DiagnosticCode::UnknownScanKind:
            return "unknown-scan-kind";
        case DiagnosticCode::UnknownObject:
            return "unknown-object";
        case DiagnosticCode::UnknownAnchor:
            return "unknown-anchor";
        case DiagnosticCode::DuplicateName:
            return "duplicate-name";
        case DiagnosticCode::ReservedName:
            return "reserved-name";
        case DiagnosticCode::DuplicateLabel:
            return "duplicate-label";
        case DiagnosticCode::RootNotFallback:
            return "root-not-fallback";
        case DiagnosticCode::PhaseNotSequence:
            return "phase-not-sequence";
        case DiagnosticCode::DepthExceeded:
            return "depth-exceeded";
        case DiagnosticCode::ActionBeforeCondition:
            return "action-before-condition";
        case DiagnosticCode::NoActions:
            return "no-actions";
    }
    return "unknown";
}

std::string format(const Diagnostic& d) {
    std::ostringstream out;
    out << d.line << ':' << d.column << ": error[" << to_string(d.code) << "]: " << d.message;
    return out.str();
}

bool ParseResult::has(DiagnosticCode code) const {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [code](const Diagnostic& d) { return d.code == code; });
}

namespace {

constexpr int kMaxTreeDepth = 16;
constexpr double kNormalizeTolerance = 1e-3;
constexpr double kKeepTolerance = 1e-12;

struct Mark {
    int line = 0;
    int column = 0;
};

Mark mark_of(const YAML::Node& node) {
    const YAML::Mark m = node.Mark();
    if (m.line < 0 || m.column < 0) {
        return {};
    }
    return {m.line + 1, m.column + 1};
}

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (c == 0) {
            return false;
        }
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) {
            return false;
        }
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) {
                return false;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        const bool overlong = (extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
                              (extra == 3 && cp < 0x10000);
        if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += extra + 1;
    }
    return true;
}

/// Full-string decimal parse; `rest` receives the unparsed tail.
std::optional<double> parse_decimal(std::string_view s, std::string_view* rest = nullptr) {
    std::string_view body = s;
    if (!body.empty() && body.front() == '+') {
        body.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec == std::errc::result_out_of_range && ptr == body.data() + body.size()) {
        // Overflow reads as infinity and underflow as the nearest denormal or zero.
        return std::strtod(std::string(body).c_str(), nullptr);
    }
    if (ec != std::errc() || ptr == body.data()) {
        if (rest) {
            *rest = s;
        }
        return std::nullopt;
    }
    const std::string_view tail(ptr, static_cast<std::size_t>(body.data() + body.size() - ptr));
    if (rest) {
        *rest = tail;
    }
    if (!tail.empty()) {
        return std::nullopt;
    }
    return value;
}

bool looks_like_unit_suffix(std::string_view tail) {
    while (!tail.empty() && tail.front() == ' ') {
        tail.remove_prefix(1);
    }
    if (tail.empty()) {
        return false;
    }
    const auto c = static_cast<unsigned char>(tail.front());
    return std::isalpha(c) || c >= 0x80 || c == '%';
}

using Marks = std::map<std::string, std::vector<Mark>>;

class Reader {
public:
    std::vector<Diagnostic> diagnostics;
    /// Leaves that already produced a diagnostic; reference checks skip them.
    std::set<std::size_t> broken_leaves;
    std::vector<YAML::Node> leaf_nodes;

    void error(DiagnosticCode code, Mark at, std::string message) {
        diagnostics.push_back({code, at.line, at.column, std::move(message)});
    }
    void error(DiagnosticCode code, const YAML::Node& at, std::string message) {
        error(code, mark_of(at), std::move(message));
    }

    bool expect_map(const YAML::Node& node, const std::string& what) {
        if (!node.IsMap()) {
            error(DiagnosticCode::WrongType, node, what + " must be a mapping");
            return false;
        }
        return true;
    }

    /// Reports duplicate, non-scalar and unknown keys.
    void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                    const std::string& what) {
        std::set<std::string> seen;
        for (const auto& entry : map) {
            const YAML::Node& key = entry.first;
            if (!key.IsScalar()) {
                error(DiagnosticCode::WrongType, key, what + ": keys must be plain strings");
                continue;
            }
            const std::string& name = key.Scalar();
            if (!seen.insert(name).second) {
                error(DiagnosticCode::DuplicateKey, key, what + ": duplicate key '" + name + "'");
            }
            if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
                error(DiagnosticCode::UnknownKey, key, what + ": unknown key '" + name + "'");
            }
        }
    }

    /// Value under `key`, or nullopt. Missing required keys are reported at `owner`.
    std::optional<YAML::Node> field(const YAML::Node& owner, const char* key, bool required,
                                    const std::string& what) {
        const YAML::Node value = owner[key];
        if (!value.IsDefined()) {
            if (required) {
                error(DiagnosticCode::MissingField, owner,
                      what + ": missing required field '" + key + "'");
            }
            return std::nullopt;
        }
        return value;
    }

    std::optional<std::string> string(const YAML::Node& node, const std::string& what) {
        if (!node.IsScalar() || node.Scalar().empty()) {
            error(DiagnosticCode::WrongType, node, what + " must be a non-empty string");
            return std::nullopt;
        }
        return node.Scalar();
    }

    std::optional<double> number(const YAML::Node& node, const std::string& what) {
        if (!node.IsScalar()) {
            error(DiagnosticCode::WrongType, node, what + " must be a number");
            return std::nullopt;
        }
        const std::string& text = node.Scalar();
        std::string_view tail;
        const auto value = parse_decimal(text, &tail);
        if (!value) {
            if (tail.size() < text.size() && looks_like_unit_suffix(tail)) {
                error(DiagnosticCode::Unit, node,
                      what + ": unit-suffixed value '" + text +
                          "'; write plain meters or degrees");
            } else {
                error(DiagnosticCode::WrongType, node, what + " must be a number, got '" + text + "'");
            }
            return std::nullopt;
        }
        if (node.Tag() == "!") {
            error(DiagnosticCode::WrongType, node, what + " must be a number, not a quoted string");
            return std::nullopt;
        }
        if (!std::isfinite(*value)) {
            error(DiagnosticCode::InvalidValue, node, what + " must be finite");
            return std::nullopt;
        }
        return value;
    }

    std::optional<double> positive(const YAML::Node& node, const std::string& what) {
        const auto value = number(node, what);
        if (value && !(*value > 0.0)) {
            error(DiagnosticCode::InvalidValue, node, what + " must be positive");
            return std::nullopt;
        }
        return value;
    }

    std::optional<std::vector<double>> numbers(const YAML::Node& node, std::size_t count,
                                               const std::string& what) {
        if (!node.IsSequence() || node.size() != count) {
            error(DiagnosticCode::WrongType, node,
                  what + " must be a list of " + std::to_string(count) + " numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        bool ok = true;
        for (std::size_t i = 0; i < count; ++i) {
            const auto v = number(node[i], what);
            ok = ok && v.has_value();
            out.push_back(v.value_or(0.0));
        }
        if (!ok) {
            return std::nullopt;
        }
        return out;
    }

    std::optional<Vec3> vec3(const YAML::Node& node, const std::string& what) {
        const auto v = numbers(node, 3, what);
        if (!v) {
            return std::nullopt;
        }
        return Vec3{(*v)[0], (*v)[1], (*v)[2]};
    }

    std::optional<Vec3> unit_vec3(const YAML::Node& node, const std::string& what) {
        auto v = vec3(node, what);
        if (!v) {
            return std::nullopt;
        }
        const double n = norm(*v);
        if (std::abs(n - 1.0) > kNormalizeTolerance) {
            error(DiagnosticCode::InvalidValue, node, what + " must be a unit vector");
            return std::nullopt;
        }
        if (std::abs(n - 1.0) > kKeepTolerance) {
            *v = (1.0 / n) * *v;
        }
        return v;
    }

    std::optional<Quaternion> quaternion(const YAML::Node& node, const std::string& what) {
        const auto v = numbers(node, 4, what);
        if (!v) {
            return std::nullopt;
        }
        Quaternion q{(*v)[0], (*v)[1], (*v)[2], (*v)[3]};
        const double n = q.norm();
        if (std::abs(n - 1.0) > kNormalizeTolerance) {
            error(DiagnosticCode::InvalidValue, node,
                  what + " must be a unit quaternion [w, x, y, z]");
            return std::nullopt;
        }
        if (std::abs(n - 1.0) > kKeepTolerance) {
            q = q.normalized();
        }
        return q;
    }

    std::optional<Pose> pose(const YAML::Node& owner, const std::string& what, bool required) {
        const auto p = field(owner, "p", required, what);
        const auto q = field(owner, "q", false, what);
        if (!p) {
            return required ? std::nullopt : std::optional<Pose>(Pose{});
        }
        const auto position = vec3(*p, what + ".p");
        const auto orientation = q ? quaternion(*q, what + ".q") : Quaternion::identity();
        if (!position || !orientation) {
            return std::nullopt;
        }
        return Pose{*position, *orientation};
    }

    // -- tree ----------------------------------------------------------------

    std::optional<bt::Node> tree_node(const YAML::Node& node, int depth,
                                      std::vector<LeafSpec>& leaves, Marks& marks) {
        if (!node.IsMap()) {
            error(DiagnosticCode::WrongType, node, "tree node must be a mapping");
            return std::nullopt;
        }
        static constexpr std::array<std::string_view, 4> kKinds{"fallback", "sequence",
                                                                "condition", "action"};
        std::vector<std::string_view> present;
        for (std::string_view k : kKinds) {
            if (node[std::string(k)].IsDefined()) {
                present.push_back(k);
            }
        }
        if (present.size() != 1) {
            std::string found;
            for (const auto& entry : node) {
                if (entry.first.IsScalar()) {
                    found = entry.first.Scalar();
                    break;
                }
            }
            error(DiagnosticCode::UnknownNodeKind, node,
                  present.empty() ? "unsupported node kind '" + found +
                                        "'; expected fallback, sequence, condition or action"
                                  : "tree node names more than one kind");
            return std::nullopt;
        }
        const std::string kind(present.front());
        const auto label = string(node[kind], kind + " label");
        if (!label) {
            return std::nullopt;
        }
        marks[*label].push_back(mark_of(node));
        const std::string what = kind + " '" + *label + "'";

        if (kind == "fallback" || kind == "sequence") {
            check_keys(node, {kind, "children"}, what);
            std::vector<bt::Node> children;
            if (const auto list = field(node, "children", true, what)) {
                if (!list->IsSequence()) {
                    error(DiagnosticCode::WrongType, *list, what + ": children must be a list");
                } else if (depth >= kMaxTreeDepth) {
                    error(DiagnosticCode::DepthExceeded, node, "depth exceeds three levels");
                    return std::nullopt;
                } else {
                    for (const auto& child : *list) {
                        if (auto parsed = tree_node(child, depth + 1, leaves, marks)) {
                            children.push_back(std::move(*parsed));
                        }
                    }
                }
            }
            return kind == "fallback" ? bt::Node::fallback(*label, std::move(children))
                                      : bt::Node::sequence(*label, std::move(children));
        }

        const std::size_t errors_before = diagnostics.size();
        if (kind == "condition") {
            leaves.emplace_back(condition(node, *label, what));
        } else {
            leaves.emplace_back(scan(node, *label, what));
        }
        leaf_nodes.push_back(node);
        if (diagnostics.size() > errors_before) {
            broken_leaves.insert(leaves.size() - 1);
        }
        return kind == "condition" ? bt::Node::condition(*label, leaves.size() - 1)
                                   : bt::Node::action(*label, leaves.size() - 1);
    }

    ConditionSpec condition(const YAML::Node& node, const std::string& label,
                            const std::string& what) {
        check_keys(node, {"condition", "kind", "subject", "reference", "threshold", "unit"}, what);
        ConditionSpec spec;
        spec.label = label;
        bool kind_known = false;
        if (const auto k = field(node, "kind", true, what)) {
            if (const auto text = string(*k, what + ".kind")) {
                if (const auto parsed = condition_kind_from_string(*text)) {
                    spec.kind = *parsed;
                    kind_known = true;
                } else {
                    error(DiagnosticCode::UnknownConditionKind, *k,
                          "unknown condition kind '" + *text + "'");
                }
            }
        }
        if (const auto s = field(node, "subject", true, what)) {
            spec.subject = string(*s, what + ".subject").value_or("");
        }
        const auto reference = field(node, "reference", false, what);
        if (!kind_known) {
            return spec;
        }
        if (is_distance(spec.kind)) {
            if (!reference) {
                error(DiagnosticCode::MissingField, node,
                      what + ": missing required field 'reference'");
            } else {
                spec.reference = string(*reference, what + ".reference").value_or("");
            }
        } else if (reference) {
            error(DiagnosticCode::UnknownKey, *reference,
                  what + ": tilt conditions take no reference");
        }
        if (const auto t = field(node, "threshold", true, what)) {
            if (const auto v = number(*t, what + ".threshold")) {
                spec.threshold = *v;
                if (is_distance(spec.kind) && spec.threshold < 0.0) {
                    error(DiagnosticCode::InvalidValue, *t,
                          what + ": distance threshold must be non-negative meters");
                } else if (!is_distance(spec.kind) && (spec.threshold < 0.0 || spec.threshold > 90.0)) {
                    error(DiagnosticCode::Unit, *t,
                          what + ": tilt threshold must be degrees in [0, 90]");
                }
            }
        }
        if (const auto u = field(node, "unit", false, what)) {
            const std::string expected = is_distance(spec.kind) ? "m" : "deg";
            const auto text = string(*u, what + ".unit");
            if (text && *text != expected) {
                error(DiagnosticCode::Unit, *u,
                      what + ": unit '" + *text + "' does not match " +
                          std::string(to_string(spec.kind)) + " (expected '" + expected + "')");
            }
        }
        return spec;
    }

    ScanSpec scan(const YAML::Node& node, const std::string& label, const std::string& what) {
        ScanSpec spec;
        spec.label = label;
        std::string kind;
        if (const auto k = field(node, "scan", true, what)) {
            kind = string(*k, what + ".scan").value_or("");
            if (!kind.empty() && kind != "project_to" && kind != "rotation") {
                error(DiagnosticCode::UnknownScanKind, *k, "unknown action kind '" + kind + "'");
            }
        }
        const auto text = [&](const char* key) {
            const auto v = field(node, key, true, what);
            return v ? string(*v, what + "." + key).value_or("") : std::string();
        };
        double gain = kind == "rotation" ? kDefaultRotationGain : kDefaultTranslationGain;
        if (const auto g = field(node, "gain", false, what)) {
            gain = positive(*g, what + ".gain").value_or(gain);
        }

        if (kind == "rotation") {
            check_keys(node,
                       {"action", "scan", "subject", "pivot", "reference", "reference_anchor",
                        "input", "gain"},
                       what);
            RotationScan r;
            r.subject = text("subject");
            r.pivot = text("pivot");
            r.reference = text("reference");
            r.reference_anchor = text("reference_anchor");
            r.gain = gain;
            if (const auto in = field(node, "input", false, what)) {
                const auto axis = string(*in, what + ".input").value_or("");
                if (axis == "x") {
                    r.input = Axis::X;
                } else if (axis == "y") {
                    r.input = Axis::Y;
                } else if (axis == "z") {
                    r.input = Axis::Z;
                } else {
                    error(DiagnosticCode::InvalidValue, *in, what + ": input must be x, y or z");
                }
            }
            spec.action = std::move(r);
        } else {
            if (kind == "project_to") {
                check_keys(node, {"action", "scan", "subject", "target", "gain"}, what);
            }
            ProjectToScan p;
            p.subject = text("subject");
            p.target = text("target");
            p.gain = gain;
            spec.action = std::move(p);
        }
        return spec;
    }
};

DiagnosticCode code_for(Rule rule) {
    switch (rule) {
        case Rule::RootNotFallback:
            return DiagnosticCode::RootNotFallback;
        case Rule::NoPhases:
            return DiagnosticCode::NoPhases;
        case Rule::PhaseNotSequence:
            return DiagnosticCode::PhaseNotSequence;
        case Rule::DepthExceeded:
            return DiagnosticCode::DepthExceeded;
        case Rule::ActionBeforeCondition:
            return DiagnosticCode::ActionBeforeCondition;
        case Rule::NoActions:
            return DiagnosticCode::NoActions;
        case Rule::DuplicateLabel:
            return DiagnosticCode::DuplicateLabel;
        case Rule::UnknownObject:
            return DiagnosticCode::UnknownObject;
        case Rule::UnknownAnchor:
            return DiagnosticCode::UnknownAnchor;
        case Rule::UnboundLeaf:
        case Rule::BindingMismatch:
            return DiagnosticCode::InvalidValue;
    }
    return DiagnosticCode::InvalidValue;
}

ActivityDocument parse_document(const YAML::Node& root, Reader& r) {
    ActivityDocument doc;
    r.check_keys(root,
                 {"phast_version", "activity", "tick_rate_hz", "fallthrough", "pass_through_gain",
                  "world", "tree"},
                 "document");

    const YAML::Node version = root["phast_version"];
    if (!version.IsDefined()) {
        r.error(DiagnosticCode::Version, root, "missing 'phast_version: 1'");
    } else if (!version.IsScalar() || version.Scalar() != std::to_string(kActivityFormatVersion)) {
        r.error(DiagnosticCode::Version, version,
                "unsupported phast_version; expected " + std::to_string(kActivityFormatVersion));
    }

    if (const auto name = r.field(root, "activity", true, "document")) {
        doc.name = r.string(*name, "activity").value_or("");
    }
    if (const auto rate = r.field(root, "tick_rate_hz", false, "document")) {
        doc.tick_rate_hz = r.positive(*rate, "tick_rate_hz").value_or(kDefaultTickRateHz);
    }
    if (const auto mode = r.field(root, "fallthrough", false, "document")) {
        const auto text = r.string(*mode, "fallthrough");
        if (text) {
            if (const auto parsed = fallthrough_from_string(*text)) {
                doc.fallthrough = *parsed;
            } else {
                r.error(DiagnosticCode::InvalidValue, *mode,
                        "fallthrough must be 'pass_through' or 'hold'");
            }
        }
    }
    if (const auto gain = r.field(root, "pass_through_gain", false, "document")) {
        doc.pass_through_gain =
            r.positive(*gain, "pass_through_gain").value_or(kDefaultTranslationGain);
    }

    // world
    std::map<std::string, ObjectState> objects;
    if (const auto world = r.field(root, "world", true, "document"); world && r.expect_map(*world, "world")) {
        r.check_keys(*world, {"held_object", "grasp_offset", "objects"}, "world");
        if (const auto offset = r.field(*world, "grasp_offset", false, "world")) {
            if (r.expect_map(*offset, "grasp_offset")) {
                r.check_keys(*offset, {"p", "q"}, "grasp_offset");
                doc.grasp_offset = r.pose(*offset, "grasp_offset", false).value_or(Pose{});
            }
        }
        if (const auto list = r.field(*world, "objects", true, "world")) {
            if (!list->IsSequence()) {
                r.error(DiagnosticCode::WrongType, *list, "world.objects must be a list");
            } else {
                for (const auto& item : *list) {
                    if (!r.expect_map(item, "object")) {
                        continue;
                    }
                    ObjectDecl decl;
                    const auto name_node = r.field(item, "name", true, "object");
                    decl.name = name_node ? r.string(*name_node, "object name").value_or("") : "";
                    const std::string what = "object '" + decl.name + "'";
                    r.check_keys(item, {"name", "p", "q", "axis", "anchors"}, what);
                    decl.pose = r.pose(item, what, true).value_or(Pose{});
                    if (const auto axis = r.field(item, "axis", false, what)) {
                        decl.axis = r.unit_vec3(*axis, what + ".axis").value_or(decl.axis);
                    }
                    if (const auto anchors = r.field(item, "anchors", false, what)) {
                        if (r.expect_map(*anchors, what + ".anchors")) {
                            std::set<std::string> seen;
                            for (const auto& entry : *anchors) {
                                if (!entry.first.IsScalar() || entry.first.Scalar().empty()) {
                                    r.error(DiagnosticCode::WrongType, entry.first,
                                            what + ": anchor names must be strings");
                                    continue;
                                }
                                const std::string anchor = entry.first.Scalar();
                                if (!seen.insert(anchor).second) {
                                    r.error(DiagnosticCode::DuplicateKey, entry.first,
                                            what + ": duplicate anchor '" + anchor + "'");
                                    continue;
                                }
                                decl.anchors[anchor] =
                                    r.vec3(entry.second, what + ".anchors." + anchor)
                                        .value_or(Vec3{});
                            }
                        }
                    }
                    if (decl.name.empty()) {
                        continue;
                    }
                    if (decl.name == kEndEffectorKey) {
                        r.error(DiagnosticCode::ReservedName, *name_node,
                                "object name '" + decl.name + "' is reserved for the end-effector");
                    }
                    if (objects.contains(decl.name)) {
                        r.error(DiagnosticCode::DuplicateName, *name_node,
                                "duplicate object name '" + decl.name + "'");
                        continue;
                    }
                    objects[decl.name] = ObjectState{decl.name, decl.pose, decl.anchors, decl.axis};
                    doc.objects.push_back(std::move(decl));
                }
            }
        }
        if (const auto held = r.field(*world, "held_object", false, "world")) {
            if (const auto name = r.string(*held, "held_object")) {
                doc.held_object = *name;
                if (!objects.contains(*name)) {
                    r.error(DiagnosticCode::UnknownObject, *held, "unknown object '" + *name + "'");
                }
            }
        }
    }

    // tree
    const YAML::Node tree = root["tree"];
    if (!tree.IsDefined() || tree.IsNull()) {
        r.error(DiagnosticCode::NoPhases, root, "no phases defined");
        return doc;
    }
    std::vector<LeafSpec> leaves;
    Marks marks;
    const auto candidate = r.tree_node(tree, 0, leaves, marks);
    if (!candidate) {
        return doc;
    }

    // References are checked leaf by leaf so that they are reported even
    // when the structure is broken.
    WorldState lookup;
    lookup.objects = objects;
    const auto mark_for = [&](const std::string& label, std::size_t occurrence) {
        const auto it = marks.find(label);
        if (it == marks.end() || it->second.empty()) {
            return Mark{};
        }
        return it->second[std::min(occurrence, it->second.size() - 1)];
    };
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (r.broken_leaves.contains(i)) {
            continue;
        }
        for (const Violation& v : check_references(leaves[i], lookup)) {
            const YAML::Node& leaf = r.leaf_nodes[i];
            const YAML::Node at = leaf[v.field];
            r.error(code_for(v.rule), at.IsDefined() ? mark_of(at) : mark_for(v.label, 0), v.message);
        }
    }

    ValidationResult result = validate(*candidate, std::move(leaves));
    std::map<std::string, std::size_t> duplicates_seen;
    for (const Violation& v : result.violations) {
        std::size_t occurrence = 0;
        if (v.rule == Rule::DuplicateLabel) {
            occurrence = ++duplicates_seen[v.label];
        }
        r.error(code_for(v.rule), mark_for(v.label, occurrence), v.message);
    }
    if (result) {
        doc.root_label = result.tree->root_label();
        doc.phases = result.tree->phases();
    }
    return doc;
}

// -- serialization -----------------------------------------------------------

std::string number_text(double v) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
    return std::string(buffer, ptr);
}

bool plain_safe(const std::string& s) {
    if (s.empty() || s == "null" || s == "Null" || s == "NULL" || s == "~") {
        return false;
    }
    const auto first = static_cast<unsigned char>(s.front());
    if (!(std::isalnum(first) || first == '_')) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char ch) {
        const auto c = static_cast<unsigned char>(ch);
        return std::isalnum(c) || c == '_' || c == '.' || c == '-' || c == '/' || c == '+';
    });
}

std::string string_text(const std::string& s) {
    if (plain_safe(s)) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        switch (ch) {
            case '"':
                out += "\\\"";
                break;
            case '\\':
                out += "\\\\";
                break;
            case '\n':
                out += "\\n";
                break;
            case '\t':
                out += "\\t";
                break;
            case '\r':
                out += "\\r";
                break;
            default:
                if (c < 0x20 || c == 0x7F) {
                    static constexpr char kHex[] = "0123456789ABCDEF";
                    out += "\\x";
                    out += kHex[c >> 4];
                    out += kHex[c & 0xF];
                } else {
                    out += ch;
                }
        }
    }
    out += '"';
    return out;
}

std::string vec_text(const Vec3& v) {
    return "[" + number_text(v.x) + ", " + number_text(v.y) + ", " + number_text(v.z) + "]";
}

std::string quat_text(const Quaternion& q) {
    return "[" + number_text(q.w) + ", " + number_text(q.x) + ", " + number_text(q.y) + ", " +
           number_text(q.z) + "]";
}

char axis_text(Axis a) {
    switch (a) {
        case Axis::X:
            return 'x';
        case Axis::Y:
            return 'y';
        case Axis::Z:
            return 'z';
    }
    return 'y';
}

}  // namespace

ParseResult parse_activity(std::string_view text) {
    ParseResult result;
    if (!valid_utf8(text)) {
        result.diagnostics.push_back(
            {DiagnosticCode::Encoding, 0, 0, "document is not valid UTF-8 text"});
        return result;
    }

    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        result.diagnostics.push_back(
            {DiagnosticCode::Syntax, e.mark.line + 1, e.mark.column + 1, e.msg});
        return result;
    } catch (const std::exception& e) {
        result.diagnostics.push_back({DiagnosticCode::Syntax, 0, 0, e.what()});
        return result;
    }

    if (!root.IsDefined() || root.IsNull()) {
        result.diagnostics.push_back({DiagnosticCode::NoPhases, 1, 1, "no phases defined"});
        return result;
    }

    Reader reader;
    if (!root.IsMap()) {
        reader.error(DiagnosticCode::WrongType, root, "document must be a mapping");
        result.diagnostics = std::move(reader.diagnostics);
        return result;
    }

    try {
        ActivityDocument doc = parse_document(root, reader);
        if (reader.diagnostics.empty()) {
            result.document = std::move(doc);
        }
    } catch (const YAML::Exception& e) {
        reader.error(DiagnosticCode::Syntax, Mark{e.mark.line + 1, e.mark.column + 1}, e.msg);
    }
    result.diagnostics = std::move(reader.diagnostics);
    std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(),
                     [](const Diagnostic& a, const Diagnostic& b) {
                         return std::tie(a.line, a.column) < std::tie(b.line, b.column);
                     });
    return result;
}

std::string serialize_activity(const ActivityDocument& doc) {
    std::ostringstream out;
    out << "phast_version: " << kActivityFormatVersion << '\n';
    out << "activity: " << string_text(doc.name) << '\n';
    out << "tick_rate_hz: " << number_text(doc.tick_rate_hz) << '\n';
    out << "fallthrough: " << to_string(doc.fallthrough) << '\n';
    out << "pass_through_gain: " << number_text(doc.pass_through_gain) << '\n';

    out << "world:\n";
    if (doc.held_object) {
        out << "  held_object: " << string_text(*doc.held_object) << '\n';
    }
    out << "  grasp_offset:\n";
    out << "    p: " << vec_text(doc.grasp_offset.position) << '\n';
    out << "    q: " << quat_text(doc.grasp_offset.orientation) << '\n';
    out << "  objects:\n";
    for (const ObjectDecl& o : doc.objects) {
        out << "    - name: " << string_text(o.name) << '\n';
        out << "      p: " << vec_text(o.pose.position) << '\n';
        out << "      q: " << quat_text(o.pose.orientation) << '\n';
        out << "      axis: " << vec_text(o.axis) << '\n';
        if (o.anchors.empty()) {
            out << "      anchors: {}\n";
        } else {
            out << "      anchors:\n";
            for (const auto& [name, position] : o.anchors) {
                out << "        " << string_text(name) << ": " << vec_text(position) << '\n';
            }
        }
    }

    out << "tree:\n";
    out << "  fallback: " << string_text(doc.root_label) << '\n';
    out << "  children:\n";
    for (const Phase& phase : doc.phases) {
        out << "    - sequence: " << string_text(phase.name) << '\n';
        out << "      children:\n";
        for (const ConditionSpec& c : phase.conditions) {
            out << "        - condition: " << string_text(c.label) << '\n';
            out << "          kind: " << to_string(c.kind) << '\n';
            out << "          subject: " << string_text(c.subject) << '\n';
            if (is_distance(c.kind)) {
                out << "          reference: " << string_text(c.reference) << '\n';
            }
            out << "          threshold: " << number_text(c.threshold) << '\n';
            out << "          unit: " << (is_distance(c.kind) ? "m" : "deg") << '\n';
        }
        for (const ScanSpec& a : phase.actions) {
            out << "        - action: " << string_text(a.label) << '\n';
            if (const auto* p = std::get_if<ProjectToScan>(&a.action)) {
                out << "          scan: project_to\n";
                out << "          subject: " << string_text(p->subject) << '\n';
                out << "          target: " << string_text(p->target) << '\n';
                out << "          gain: " << number_text(p->gain) << '\n';
            } else {
                const auto& r = std::get<RotationScan>(a.action);
                out << "          scan: rotation\n";
                out << "          subject: " << string_text(r.subject) << '\n';
                out << "          pivot: " << string_text(r.pivot) << '\n';
                out << "          reference: " << string_text(r.reference) << '\n';
                out << "          reference_anchor: " << string_text(r.reference_anchor) << '\n';
                out << "          input: " << axis_text(r.input) << '\n';
                out << "          gain: " << number_text(r.gain) << '\n';
            }
        }
    }
    return out.str();
}

PhastTree build_tree(const ActivityDocument& doc) {
    return PhastTree::from_phases(doc.root_label, doc.phases);
}

WorldState build_world(const ActivityDocument& doc, std::optional<double> tick_rate_hz) {
    const double rate = tick_rate_hz.value_or(doc.tick_rate_hz);
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("tick rate must be positive");
    }
    std::map<std::string, ObjectState> objects;
    for (const ObjectDecl& o : doc.objects) {
        objects[o.name] = ObjectState{o.name, o.pose, o.anchors, o.axis};
    }
    return make_world(std::move(objects), doc.held_object, doc.grasp_offset, 1.0 / rate);
}

TickOptions tick_options(const ActivityDocument& doc) {
    return {doc.fallthrough, doc.pass_through_gain};
}

Engine build_engine(const ActivityDocument& doc, std::optional<double> tick_rate_hz) {
    return Engine(build_tree(doc), build_world(doc, tick_rate_hz), tick_options(doc));
}

}  // namespace phast
