#include "phast/world.hpp"

#include <cmath>
#include <stdexcept>

namespace phast {

WorldState make_world(std::map<std::string, ObjectState> objects,
                      std::optional<std::string> held_object, Pose grasp_offset, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("world dt must be positive");
    }
    for (const auto& [name, obj] : objects) {
        if (name != obj.name) {
            throw std::invalid_argument("object key '" + name + "' does not match its name");
        }
        if (std::abs(norm(obj.longitudinal_axis) - 1.0) > kUnitTolerance) {
            throw std::invalid_argument("longitudinal axis of '" + name + "' is not unit");
        }
    }
    if (held_object && !objects.contains(*held_object)) {
        throw std::invalid_argument("held object '" + *held_object + "' does not exist");
    }

    WorldState world;
    world.objects = std::move(objects);
    world.held_object = std::move(held_object);
    world.ee_grasp_offset = grasp_offset;
    world.dt = dt;
    if (world.held_object) {
        world.ee_pose = compose(world.objects.at(*world.held_object).pose, grasp_offset);
    }
    return world;
}

const ObjectState& object(const WorldState& world, const std::string& name) {
    const auto it = world.objects.find(name);
    if (it == world.objects.end()) {
        throw LookupError("unknown object '" + name + "'");
    }
    return it->second;
}

Vec3 anchor_world(const WorldState& world, const std::string& object_name,
                  const std::string& anchor) {
    const ObjectState& obj = object(world, object_name);
    const auto it = obj.anchors.find(anchor);
    if (it == obj.anchors.end()) {
        throw LookupError("unknown anchor '" + anchor + "' on '" + object_name + "'");
    }
    return obj.pose.position + obj.pose.orientation.rotate(it->second);
}

WorldState apply_pose(const WorldState& world, const std::string& object_name,
                      const Pose& new_pose) {
    if (!is_finite(new_pose)) {
        throw std::invalid_argument("non-finite pose for '" + object_name + "'");
    }
    object(world, object_name);

    WorldState next = world;
    next.objects.at(object_name).pose = new_pose;
    if (next.held_object == object_name) {
        next.ee_pose = compose(new_pose, next.ee_grasp_offset);
    }
    return next;
}

TickSnapshot snapshot(const WorldState& world, bt::LedgerEntries statuses,
                      std::optional<std::string> active_phase, const UserInput& u,
                      bool degenerate) {
    TickSnapshot snap;
    snap.tick_index = world.tick_index;
    snap.time_s = static_cast<double>(world.tick_index) * world.dt;
    for (const auto& [name, obj] : world.objects) {
        snap.poses.emplace(name, obj.pose);
    }
    snap.ee_pose = world.ee_pose;
    snap.active_phase = std::move(active_phase);
    snap.statuses = std::move(statuses);
    snap.applied_input = u;
    snap.degenerate = degenerate;
    return snap;
}

}  // namespace phast
