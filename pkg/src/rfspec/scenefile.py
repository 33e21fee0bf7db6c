"""Scene description files (YAML) and scene provenance hashing.

Schema::

    rf:
      frequency_hz: 2.412e9
    array:                  # optional keys: spacing_m, normal, row_axis
      rows: 4
      cols: 4
    receiver: [1.5, 1.5, 0.5]
    box:
      min: [0, 0, 0]
      max: [3, 3, 2.5]
    reflectors:             # may be empty or omitted
      - name: floor         # optional
        point: [1.5, 1.5, 0]
        normal: [0, 0, 1]
        gamma_re: -0.6
        gamma_im: 0.0       # optional, default 0
        half_widths: [1.5, 1.5]   # optional, default unbounded
    seed: 0                 # optional, default 0

Normals within 1e-6 of unit length are renormalised; anything further off
is rejected.
"""

from __future__ import annotations

import math
import re

import numpy as np
import yaml

from .channel import ArrayGeometry, RFParams
from .errors import DomainError, MissingFieldError, SceneInvariantError, SceneSyntaxError
from .raytrace import Reflector, Scene

NORMAL_TOL = 1e-6
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_TOP_KEYS = {"rf", "array", "receiver", "box", "reflectors", "seed"}
_REFLECTOR_KEYS = {"name", "point", "normal", "gamma_re", "gamma_im", "half_widths"}


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class _Reader:
    def __init__(self, text):
        self.loader = yaml.SafeLoader(text)
        try:
            self.root = self.loader.get_single_node()
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise SceneSyntaxError(str(exc).splitlines()[0],
                                   None if mark is None else mark.line + 1) from None

    @staticmethod
    def line(node):
        return node.start_mark.line + 1

    def mapping(self, node, what, allowed=None):
        if not isinstance(node, yaml.MappingNode):
            raise SceneSyntaxError(f"{what} must be a mapping", self.line(node))
        out = {}
        for k, v in node.value:
            key = self.loader.construct_object(k)
            if allowed is not None and key not in allowed:
                raise SceneSyntaxError(f"unknown field {key!r} in {what}", self.line(k))
            if key in out:
                raise SceneSyntaxError(f"duplicate field {key!r} in {what}", self.line(k))
            out[key] = v
        return out

    def require(self, fields, key, parent, what):
        if key not in fields:
            raise MissingFieldError(f"{what} is missing {key!r}", self.line(parent))
        return fields[key]

    def value(self, node):
        return self.loader.construct_object(node, deep=True)

    def number(self, node, what):
        v = self.value(node)
        try:
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        except (TypeError, ValueError):
            raise SceneSyntaxError(f"{what} must be a number", self.line(node)) from None

    def integer(self, node, what):
        v = self.value(node)
        if isinstance(v, bool) or not isinstance(v, int):
            raise SceneSyntaxError(f"{what} must be an integer", self.line(node))
        return v

    def vector(self, node, what, n=3):
        if not isinstance(node, yaml.SequenceNode) or len(node.value) != n:
            raise SceneSyntaxError(f"{what} must be a list of {n} numbers", self.line(node))
        return tuple(self.number(x, what) for x in node.value)


def _unit_or_fail(v, what, line):
    norm = math.sqrt(sum(x * x for x in v))
    if not abs(norm - 1.0) <= NORMAL_TOL:
        raise SceneInvariantError(f"{what} has norm {norm:.9g}, expected 1", line)
    return tuple(x / norm for x in v)


def parse_scene(text: str) -> Scene:
    r = _Reader(text)
    if r.root is None:
        raise MissingFieldError("empty scene description", 1)
    top = r.mapping(r.root, "scene", _TOP_KEYS)

    rf_node = r.require(top, "rf", r.root, "scene")
    rf_fields = r.mapping(rf_node, "rf", {"frequency_hz"})
    f_node = r.require(rf_fields, "frequency_hz", rf_node, "rf")
    freq = r.number(f_node, "frequency_hz")
    if not (math.isfinite(freq) and freq > 0):
        raise SceneInvariantError("frequency_hz must be positive", r.line(f_node))
    rf = RFParams(freq)

    box_node = r.require(top, "box", r.root, "scene")
    box = r.mapping(box_node, "box", {"min", "max"})
    lo = r.vector(r.require(box, "min", box_node, "box"), "box.min")
    hi = r.vector(r.require(box, "max", box_node, "box"), "box.max")
    if not all(b > a for a, b in zip(lo, hi)):
        raise SceneInvariantError("box.max must exceed box.min on every axis", r.line(box_node))

    rx_node = r.require(top, "receiver", r.root, "scene")
    receiver = r.vector(rx_node, "receiver")
    if not all(a <= x <= b for a, x, b in zip(lo, receiver, hi)):
        raise SceneInvariantError("receiver lies outside the box", r.line(rx_node))

    arr_node = r.require(top, "array", r.root, "scene")
    arr = r.mapping(arr_node, "array", {"rows", "cols", "spacing_m", "normal", "row_axis"})
    rows = r.integer(r.require(arr, "rows", arr_node, "array"), "array.rows")
    cols = r.integer(r.require(arr, "cols", arr_node, "array"), "array.cols")
    spacing = None
    if "spacing_m" in arr and r.value(arr["spacing_m"]) is not None:
        spacing = r.number(arr["spacing_m"], "array.spacing_m")
    normal = (0.0, 0.0, 1.0)
    row_axis = (1.0, 0.0, 0.0)
    if "normal" in arr:
        normal = _unit_or_fail(r.vector(arr["normal"], "array.normal"), "array.normal",
                               r.line(arr["normal"]))
    if "row_axis" in arr:
        row_axis = _unit_or_fail(r.vector(arr["row_axis"], "array.row_axis"), "array.row_axis",
                                 r.line(arr["row_axis"]))
    try:
        geom = ArrayGeometry(rows, cols, spacing, receiver, normal, row_axis)
    except DomainError as exc:
        raise SceneInvariantError(str(exc), r.line(arr_node)) from None

    reflectors = []
    refl_node = top.get("reflectors")
    if refl_node is not None and r.value(refl_node) is not None:
        if not isinstance(refl_node, yaml.SequenceNode):
            raise SceneSyntaxError("reflectors must be a list", r.line(refl_node))
        for i, node in enumerate(refl_node.value):
            what = f"reflector {i}"
            fields = r.mapping(node, what, _REFLECTOR_KEYS)
            name = str(r.value(fields["name"])) if "name" in fields else ""
            point = r.vector(r.require(fields, "point", node, what), f"{what} point")
            n_node = r.require(fields, "normal", node, what)
            n = _unit_or_fail(r.vector(n_node, f"{what} normal"), f"{what} normal", r.line(n_node))
            g_node = r.require(fields, "gamma_re", node, what)
            gamma = complex(r.number(g_node, f"{what} gamma_re"),
                            r.number(fields["gamma_im"], f"{what} gamma_im") if "gamma_im" in fields else 0.0)
            if abs(gamma) > 1.0:
                raise SceneInvariantError(f"{what}: |gamma| = {abs(gamma):.9g} exceeds 1", r.line(g_node))
            hw = (math.inf, math.inf)
            if "half_widths" in fields:
                hw = r.vector(fields["half_widths"], f"{what} half_widths", 2)
                if not all(h > 0 for h in hw):
                    raise SceneInvariantError(f"{what}: half_widths must be positive",
                                              r.line(fields["half_widths"]))
            refl = Reflector(point, n, gamma, hw, name)
            corners = np.array(np.meshgrid(*zip(lo, hi))).reshape(3, -1).T
            s = (corners - np.asarray(refl.point)) @ np.asarray(refl.normal)
            if s.min() > 0 or s.max() < 0:
                raise SceneInvariantError(f"{what} does not intersect the box", r.line(node))
            reflectors.append(refl)

    seed = 0
    if "seed" in top:
        seed = r.integer(top["seed"], "seed")
        if not 0 <= seed < 2 ** 64:
            raise SceneInvariantError("seed must be an unsigned 64-bit integer", r.line(top["seed"]))

    try:
        return Scene(tuple(reflectors), geom, rf, lo, hi, seed)
    except DomainError as exc:
        raise SceneInvariantError(str(exc), r.line(r.root)) from None


def _num(x: float) -> str:
    if math.isinf(x):
        return ".inf" if x > 0 else "-.inf"
    return repr(float(x))


def _vec(v) -> str:
    return "[" + ", ".join(_num(x) for x in v) + "]"


def scene_to_text(scene: Scene) -> str:
    """Canonical YAML for ``scene``; ``parse_scene`` inverts it exactly."""
    g = scene.array
    lines = [
        "rf:",
        f"  frequency_hz: {_num(scene.rf.frequency_hz)}",
        "array:",
        f"  rows: {g.rows}",
        f"  cols: {g.cols}",
        f"  spacing_m: {'null' if g.spacing_m is None else _num(g.spacing_m)}",
        f"  normal: {_vec(g.normal)}",
        f"  row_axis: {_vec(g.row_axis)}",
        f"receiver: {_vec(g.origin)}",
        "box:",
        f"  min: {_vec(scene.box_min)}",
        f"  max: {_vec(scene.box_max)}",
    ]
    if scene.reflectors:
        lines.append("reflectors:")
        for refl in scene.reflectors:
            lines += [
                f"  - name: {yaml.safe_dump(refl.name, default_style=chr(34)).strip()}",
                f"    point: {_vec(refl.point)}",
                f"    normal: {_vec(refl.normal)}",
                f"    gamma_re: {_num(refl.gamma.real)}",
                f"    gamma_im: {_num(refl.gamma.imag)}",
                f"    half_widths: {_vec(refl.half_widths)}",
            ]
    else:
        lines.append("reflectors: []")
    lines.append(f"seed: {int(scene.seed)}")
    return "\n".join(lines) + "\n"


def scene_hash(scene: Scene) -> bytes:
    """64-bit FNV-1a of the whitespace-normalised canonical text, little-endian."""
    canon = re.sub(r"\s+", " ", scene_to_text(scene)).strip()
    return fnv1a_64(canon.encode("utf-8")).to_bytes(8, "little")


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene(fh.read())
