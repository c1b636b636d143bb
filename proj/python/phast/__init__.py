"""Python bindings for the phast core."""

import json

from ._phast import (
    GeometryError,
    canonicalize,
    check_activity,
    distance,
    project_to,
    replay_files,
    rotate_about_pivot,
    rotation_axis,
    rotation_matrix,
    tilt_degrees,
)
from ._phast import Engine as _Engine


class Engine(_Engine):
    """Engine whose step() returns the snapshot as a dict."""

    def step(self, u=(0.0, 0.0, 0.0)):
        return json.loads(self.step_json(list(u)))


__all__ = [
    "Engine",
    "GeometryError",
    "canonicalize",
    "check_activity",
    "distance",
    "project_to",
    "replay_files",
    "rotate_about_pivot",
    "rotation_axis",
    "rotation_matrix",
    "tilt_degrees",
]
