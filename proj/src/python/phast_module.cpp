#include "phast/activity.hpp"
#include "phast/geometry.hpp"
#include "phast/replay.hpp"
#include "phast/wire.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <array>
#include <sstream>

namespace py = pybind11;
using namespace phast;

namespace {

using Triple = std::array<double, 3>;
using Quad = std::array<double, 4>;

Vec3 vec(const Triple& a) { return {a[0], a[1], a[2]}; }
Triple triple(const Vec3& v) { return {v.x, v.y, v.z}; }
Quad quad(const Quaternion& q) { return {q.w, q.x, q.y, q.z}; }

std::vector<std::string> diagnostics_of(const ParseResult& r) {
    std::vector<std::string> out;
    for (const Diagnostic& d : r.diagnostics) {
        out.push_back(format(d));
    }
    return out;
}

ActivityDocument parse_or_throw(const std::string& text) {
    ParseResult r = parse_activity(text);
    if (!r) {
        std::string joined;
        for (const std::string& line : diagnostics_of(r)) {
            joined += (joined.empty() ? "" : "\n") + line;
        }
        throw std::invalid_argument(joined);
    }
    return std::move(*r.document);
}

class PyEngine {
public:
    PyEngine(const std::string& activity, std::optional<double> tick_rate_hz)
        : engine_(build_engine(parse_or_throw(activity), tick_rate_hz)) {}

    std::string step(const Triple& u) { return wire::encode_snapshot(engine_.step(vec(u))); }
    void reset() { engine_.reset(); }
    std::int64_t tick_index() const { return engine_.world().tick_index; }
    double dt() const { return engine_.world().dt; }
    std::optional<std::string> active_phase() const {
        return phast::active_phase(engine_.tree(), engine_.world());
    }
    std::map<std::string, std::pair<Triple, Quad>> poses() const {
        std::map<std::string, std::pair<Triple, Quad>> out;
        for (const auto& [name, o] : engine_.world().objects) {
            out[name] = {triple(o.pose.position), quad(o.pose.orientation)};
        }
        return out;
    }

private:
    Engine engine_;
};

}  // namespace

PYBIND11_MODULE(_phast, m) {
    m.doc() = "Shared-control teleoperation core";

    py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);

    m.def("project_to", [](const Triple& b, const Triple& c, const Triple& u) {
        return triple(project_to(vec(b), vec(c), vec(u)));
    }, py::arg("l_b"), py::arg("l_c"), py::arg("l_u"));

    m.def("rotation_axis", [](const Triple& c, const Triple& b, const Triple& p) {
        return triple(rotation_axis(vec(c), vec(b), vec(p)));
    }, py::arg("l_c"), py::arg("l_b"), py::arg("p_c"));

    m.def("rotation_matrix", [](const Triple& axis, double theta) {
        const HomogeneousTransform t = rotation_matrix(vec(axis), theta);
        std::array<std::array<double, 4>, 4> rows{};
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t c = 0; c < 4; ++c) {
                rows[r][c] = t(r, c);
            }
        }
        return rows;
    }, py::arg("axis"), py::arg("theta"));

    m.def("rotate_about_pivot", [](const Triple& p, const Quad& q, const Triple& pivot, const Triple& axis,
                                   double theta) {
        const Pose out = rotate_about_pivot(Pose{vec(p), Quaternion{q[0], q[1], q[2], q[3]}}, vec(pivot),
                                            vec(axis), theta);
        return std::make_pair(triple(out.position), quad(out.orientation));
    }, py::arg("position"), py::arg("orientation"), py::arg("pivot"), py::arg("axis"), py::arg("theta"));

    m.def("distance", [](const Triple& a, const Triple& b) { return distance(vec(a), vec(b)); });

    m.def("tilt_degrees", [](const Quad& q, const Triple& axis) {
        return tilt_degrees(Quaternion{q[0], q[1], q[2], q[3]}, vec(axis));
    }, py::arg("orientation"), py::arg("body_axis"));

    m.def("check_activity", [](const std::string& text) { return diagnostics_of(parse_activity(text)); },
          "Diagnostics for an activity document; empty when it is valid.");

    m.def("canonicalize", [](const std::string& text) { return serialize_activity(parse_or_throw(text)); },
          "Canonical text of a valid activity document.");

    m.def("replay_files", [](const std::filesystem::path& activity, const std::filesystem::path& trace,
                             const std::filesystem::path& out, std::optional<double> rate) {
        std::ostringstream err;
        const int code = replay_files(activity, trace, out, rate, err);
        return std::make_pair(code, err.str());
    }, py::arg("activity"), py::arg("trace"), py::arg("out"), py::arg("tick_rate_hz") = py::none());

    py::class_<PyEngine>(m, "Engine")
        .def(py::init<const std::string&, std::optional<double>>(), py::arg("activity"),
             py::arg("tick_rate_hz") = py::none())
        .def("step_json", &PyEngine::step, py::arg("u"))
        .def("reset", &PyEngine::reset)
        .def_property_readonly("tick_index", &PyEngine::tick_index)
        .def_property_readonly("dt", &PyEngine::dt)
        .def_property_readonly("active_phase", &PyEngine::active_phase)
        .def_property_readonly("poses", &PyEngine::poses);
}
