#pragma once

// The human-authored `.activity` document: a YAML tree that declares the
// world objects and the PHAST tree (phases, conditions, action nodes).
//
// parse_activity() is total: any byte sequence yields either a document that
// passes structural and reference validation, or a non-empty diagnostic list.

#include "phast/engine.hpp"
#include "phast/geometry.hpp"
#include "phast/world.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phast {

inline constexpr int kActivityFormatVersion = 1;
inline constexpr double kDefaultTickRateHz = 50.0;

struct ObjectDecl {
    std::string name;
    Pose pose;
    std::map<std::string, Vec3> anchors;
    Vec3 axis{0.0, 0.0, 1.0};

    friend bool operator==(const ObjectDecl&, const ObjectDecl&) = default;
};

struct ActivityDocument {
    std::string name;
    double tick_rate_hz = kDefaultTickRateHz;
    FallthroughMode fallthrough = FallthroughMode::PassThrough;
    double pass_through_gain = kDefaultTranslationGain;
    std::optional<std::string> held_object;
    Pose grasp_offset;
    std::vector<ObjectDecl> objects;
    std::string root_label;
    std::vector<Phase> phases;

    friend bool operator==(const ActivityDocument&, const ActivityDocument&) = default;
};

enum class DiagnosticCode {
    Encoding,
    Syntax,
    Version,
    MissingField,
    UnknownKey,
    DuplicateKey,
    WrongType,
    InvalidValue,
    Unit,
    NoPhases,
    UnknownNodeKind,
    UnknownConditionKind,
    UnknownScanKind,
    UnknownObject,
    UnknownAnchor,
    DuplicateName,
    ReservedName,
    DuplicateLabel,
    RootNotFallback,
    PhaseNotSequence,
    DepthExceeded,
    ActionBeforeCondition,
    NoActions,
};

/// Stable identifier, e.g. "unknown-anchor".
std::string_view to_string(DiagnosticCode code);

struct Diagnostic {
    DiagnosticCode code;
    int line = 0;    // 1-based; 0 when no position applies
    int column = 0;  // 1-based
    std::string message;
};

/// "line:col: error[code]: message"
std::string format(const Diagnostic& d);

struct ParseResult {
    std::optional<ActivityDocument> document;
    std::vector<Diagnostic> diagnostics;

    explicit operator bool() const { return document.has_value(); }
    bool has(DiagnosticCode code) const;
};

ParseResult parse_activity(std::string_view text);

/// Canonical text: fixed key order, shortest round-trip numbers, trailing
/// newline. parse_activity(serialize_activity(d)) == d for valid documents.
std::string serialize_activity(const ActivityDocument& doc);

PhastTree build_tree(const ActivityDocument& doc);
WorldState build_world(const ActivityDocument& doc, std::optional<double> tick_rate_hz = {});
TickOptions tick_options(const ActivityDocument& doc);
Engine build_engine(const ActivityDocument& doc, std::optional<double> tick_rate_hz = {});

}  // namespace phast
