#pragma once

// Kinematic world: named rigid objects with body-frame anchors, one held
// object that the end-effector follows, and the tick clock.

#include "phast/bt.hpp"
#include "phast/geometry.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace phast {

/// Key under which the end-effector pose appears next to object poses.
inline constexpr const char* kEndEffectorKey = "ee";

struct ObjectState {
    std::string name;
    Pose pose;
    std::map<std::string, Vec3> anchors;  // body frame, meters
    Vec3 longitudinal_axis{0.0, 0.0, 1.0};

    friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct WorldState {
    std::map<std::string, ObjectState> objects;
    std::optional<std::string> held_object;
    /// End-effector pose expressed in the held object's frame.
    Pose ee_grasp_offset;
    Pose ee_pose;
    std::int64_t tick_index = 0;
    double dt = 0.02;

    friend bool operator==(const WorldState&, const WorldState&) = default;
};

class LookupError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds a world and places the end-effector on the held object.
/// Throws std::invalid_argument on broken invariants.
WorldState make_world(std::map<std::string, ObjectState> objects,
                      std::optional<std::string> held_object, Pose grasp_offset, double dt);

const ObjectState& object(const WorldState& world, const std::string& name);

Vec3 anchor_world(const WorldState& world, const std::string& object_name,
                  const std::string& anchor);

/// Copy of `world` with one object's pose replaced. A held object drags the
/// end-effector with it. Throws std::invalid_argument on a non-finite pose.
WorldState apply_pose(const WorldState& world, const std::string& object_name,
                      const Pose& new_pose);

struct TickSnapshot {
    std::int64_t tick_index = 0;
    double time_s = 0.0;
    std::map<std::string, Pose> poses;
    Pose ee_pose;
    std::optional<std::string> active_phase;
    bt::LedgerEntries statuses;
    UserInput applied_input;
    bool degenerate = false;

    friend bool operator==(const TickSnapshot&, const TickSnapshot&) = default;
};

TickSnapshot snapshot(const WorldState& world, bt::LedgerEntries statuses,
                      std::optional<std::string> active_phase, const UserInput& u,
                      bool degenerate = false);

}  // namespace phast
