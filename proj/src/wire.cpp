#include "phast/wire.hpp"

#include "json.hpp"

namespace phast::wire {

using Json = nlohmann::ordered_json;

namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Json quat_json(const Quaternion& q) { return Json::array({q.w, q.x, q.y, q.z}); }

Json pose_json(const Pose& p) {
    Json out = Json::object();
    out["p"] = vec_json(p.position);
    out["q"] = quat_json(p.orientation);
    return out;
}

Json snapshot_json(const TickSnapshot& snap) {
    Json out = Json::object();
    out["tick"] = snap.tick_index;
    out["time_s"] = snap.time_s;
    out["active_phase"] = snap.active_phase ? Json(*snap.active_phase) : Json(nullptr);
    out["degenerate"] = snap.degenerate;

    // Object names and the end-effector key share one sorted namespace.
    std::map<std::string, Pose> all = snap.poses;
    all[kEndEffectorKey] = snap.ee_pose;
    Json poses = Json::object();
    for (const auto& [name, pose] : all) {
        poses[name] = pose_json(pose);
    }
    out["poses"] = std::move(poses);

    Json statuses = Json::array();
    for (const auto& [label, status] : snap.statuses) {
        statuses.push_back(Json::array({label, std::string(bt::to_string(status))}));
    }
    out["statuses"] = std::move(statuses);
    out["u"] = vec_json(snap.applied_input);
    return out;
}

double number_at(const Json& j, std::size_t i) {
    const Json& v = j.at(i);
    if (!v.is_number()) {
        throw DecodeError("expected a number");
    }
    return v.get<double>();
}

Vec3 vec_from(const Json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw DecodeError("expected [x, y, z]");
    }
    return {number_at(j, 0), number_at(j, 1), number_at(j, 2)};
}

Quaternion quat_from(const Json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw DecodeError("expected [w, x, y, z]");
    }
    return {number_at(j, 0), number_at(j, 1), number_at(j, 2), number_at(j, 3)};
}

TickSnapshot snapshot_from(const Json& j) {
    try {
        TickSnapshot snap;
        snap.tick_index = j.at("tick").get<std::int64_t>();
        snap.time_s = j.at("time_s").get<double>();
        const Json& phase = j.at("active_phase");
        if (!phase.is_null()) {
            snap.active_phase = phase.get<std::string>();
        }
        snap.degenerate = j.at("degenerate").get<bool>();
        for (const auto& [name, pose] : j.at("poses").items()) {
            const Pose p{vec_from(pose.at("p")), quat_from(pose.at("q"))};
            if (name == kEndEffectorKey) {
                snap.ee_pose = p;
            } else {
                snap.poses.emplace(name, p);
            }
        }
        for (const Json& entry : j.at("statuses")) {
            if (!entry.is_array() || entry.size() != 2) {
                throw DecodeError("status entries are [label, status]");
            }
            const auto status = bt::status_from_string(entry.at(1).get<std::string>());
            if (!status) {
                throw DecodeError("unknown status");
            }
            snap.statuses.emplace_back(entry.at(0).get<std::string>(), *status);
        }
        snap.applied_input = vec_from(j.at("u"));
        return snap;
    } catch (const Json::exception& e) {
        throw DecodeError(std::string("snapshot: ") + e.what());
    }
}

Json parse_line(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::exception& e) {
        throw DecodeError(e.what());
    }
}

}  // namespace

std::string encode_snapshot(const TickSnapshot& snap) { return snapshot_json(snap).dump(); }

TickSnapshot decode_snapshot(std::string_view line) { return snapshot_from(parse_line(line)); }

std::variant<ClientMessage, ClientDecodeError> decode_client(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const Json::exception& e) {
        return ClientDecodeError{kErrorMalformed, e.what()};
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        return ClientDecodeError{kErrorMalformed, "message must be an object with a string 'type'"};
    }
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "input") {
            const Vec3 u = vec_from(j.at("u"));
            if (!is_finite(u)) {
                return ClientDecodeError{kErrorMalformed, "input components must be finite"};
            }
            return ClientMessage{InputMessage{u}};
        }
        if (type == "load") {
            return ClientMessage{LoadMessage{j.at("activity").get<std::string>()}};
        }
        if (type == "reset") {
            return ClientMessage{ResetMessage{}};
        }
        if (type == "set_mode") {
            const auto mode = fallthrough_from_string(j.at("mode").get<std::string>());
            if (!mode) {
                return ClientDecodeError{kErrorMalformed, "mode must be 'pass_through' or 'hold'"};
            }
            return ClientMessage{SetModeMessage{*mode}};
        }
    } catch (const Json::exception& e) {
        return ClientDecodeError{kErrorMalformed, e.what()};
    } catch (const DecodeError& e) {
        return ClientDecodeError{kErrorMalformed, e.what()};
    }
    return ClientDecodeError{kErrorUnknownType, "unknown message type '" + type + "'"};
}

std::string encode_client(const ClientMessage& message) {
    Json j = Json::object();
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, InputMessage>) {
                j["type"] = "input";
                j["u"] = vec_json(m.u);
            } else if constexpr (std::is_same_v<T, LoadMessage>) {
                j["type"] = "load";
                j["activity"] = m.activity;
            } else if constexpr (std::is_same_v<T, ResetMessage>) {
                j["type"] = "reset";
            } else {
                j["type"] = "set_mode";
                j["mode"] = std::string(to_string(m.mode));
            }
        },
        message);
    return j.dump();
}

std::string encode_state(const TickSnapshot& snap) {
    Json j = Json::object();
    j["type"] = "state";
    j["snapshot"] = snapshot_json(snap);
    return j.dump();
}

std::string encode_error(std::string_view code, std::string_view detail) {
    Json j = Json::object();
    j["type"] = "error";
    j["code"] = std::string(code);
    j["detail"] = std::string(detail);
    return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string encode_loaded(std::string_view activity, const std::vector<std::string>& labels) {
    Json j = Json::object();
    j["type"] = "loaded";
    j["activity"] = std::string(activity);
    j["labels"] = labels;
    return j.dump();
}

ServerMessage decode_server(std::string_view text) {
    const Json j = parse_line(text);
    try {
        const std::string type = j.at("type").get<std::string>();
        if (type == "state") {
            return StateMessage{snapshot_from(j.at("snapshot"))};
        }
        if (type == "error") {
            return ErrorMessage{j.at("code").get<std::string>(), j.at("detail").get<std::string>()};
        }
        if (type == "loaded") {
            return LoadedMessage{j.at("activity").get<std::string>(),
                                 j.at("labels").get<std::vector<std::string>>()};
        }
        throw DecodeError("unknown server message type '" + type + "'");
    } catch (const Json::exception& e) {
        throw DecodeError(e.what());
    }
}

}  // namespace phast::wire
