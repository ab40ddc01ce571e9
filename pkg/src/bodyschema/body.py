"""Long-term body models: kinematic chain (size), taxel clouds (shape), distortions.

A body spec is a JSON document::

    {
      "name": "planar_arm",
      "base": "torso",
      "links": ["torso", "upper_arm", ...],
      "joints": [{"id", "parent", "child", "axis",
                  "pre_transform": {"quat": [w, x, y, z], "xyz_mm": [...]},
                  "limits_rad": [min, max]}, ...],
      "landmarks": {"wrist": {"link": "hand", "xyz_mm": [0, 0, 0]}, ...},
      "skin_patches": [{"link": "forearm", "landmarks": ["elbow", "wrist"],
                        "grid": {"rows", "cols", "spacing_mm", "origin_mm"}
                        | "taxels": [{"id", "xyz_mm"}, ...]}],
      "distortion": {...}   # optional, see parse_distortion
    }

Link frames use x as the proximodistal axis, y as mediolateral and z as the
skin normal. Distortion scale factors act along those axes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvariantError, SpecError, StructuralError
from .geometry import Pose, Rotation

BUILTIN_BODIES = ("planar_arm", "hand")

AXIS_NAMES = ("proximodistal", "mediolateral", "normal")


@dataclass(frozen=True)
class Joint:
    id: str
    parent: str
    child: str
    axis: tuple[float, float, float]
    pre_transform: Pose
    limits: tuple[float, float]


@dataclass(frozen=True)
class Landmark:
    link: str
    offset: tuple[float, float, float]


@dataclass(frozen=True)
class BodySizeModel:
    """Kinematic "stick figure": joints ordered from the base outwards."""

    base: str
    links: tuple[str, ...]
    joints: tuple[Joint, ...]
    landmarks: dict[str, Landmark] = field(default_factory=dict)
    name: str = "body"

    def joint(self, joint_id: str) -> Joint:
        for j in self.joints:
            if j.id == joint_id:
                return j
        raise KeyError(joint_id)

    @property
    def joint_ids(self) -> tuple[str, ...]:
        return tuple(j.id for j in self.joints)


@dataclass(frozen=True)
class Taxel:
    id: int
    link: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class GridInfo:
    rows: int
    cols: int
    spacing: tuple[float, float]


@dataclass(frozen=True)
class SkinPatch:
    link: str
    taxels: tuple[Taxel, ...]
    grid: GridInfo | None = None
    bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    landmarks: tuple[str, str] | None = None

    @cached_property
    def _by_id(self):
        return {t.id: t for t in self.taxels}

    def taxel(self, taxel_id: int) -> Taxel:
        return self._by_id[taxel_id]


@dataclass(frozen=True)
class BodyShapeModel:
    """Skin spatial calibration: taxel positions per link frame."""

    patches: dict[str, SkinPatch]

    def all_taxels(self):
        for patch in self.patches.values():
            yield from patch.taxels

    @cached_property
    def owners(self) -> dict[int, list[str]]:
        """Taxel id -> patch keys carrying that id."""
        out = {}
        for key, patch in self.patches.items():
            for t in patch.taxels:
                if key not in out.setdefault(t.id, []):
                    out[t.id].append(key)
        return out


@dataclass(frozen=True)
class DistortionMap:
    """Per-link axis scales plus per-patch skin-frame bias (mm)."""

    scales: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    biases: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    def scale_for(self, link: str) -> tuple[float, float, float]:
        return self.scales.get(link, (1.0, 1.0, 1.0))

    def validate(self):
        for link, s in self.scales.items():
            for name, v in zip(AXIS_NAMES, s):
                if not v > 0.0:
                    raise InvariantError(f"distortion.links.{link}.{name}",
                                         f"scale must be > 0, got {v}")


@dataclass(frozen=True)
class Violation:
    kind: str  # "structural" or "invariant"
    subject: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.subject}: {self.message}"


# -- validation ---------------------------------------------------------------

def validate_model(size: BodySizeModel, shape: BodyShapeModel | None = None) -> list[Violation]:
    """List every invariant violation; an empty list means the models are valid."""
    out = []
    links = set(size.links)
    if size.base not in links:
        out.append(Violation("structural", f"base {size.base}", "base link is not declared"))

    parent_of = {}
    for j in size.joints:
        subj = f"joint {j.id}"
        for role, link in (("parent", j.parent), ("child", j.child)):
            if link not in links:
                out.append(Violation("structural", subj, f"{role} link {link!r} does not exist"))
        if j.child == size.base:
            out.append(Violation("structural", subj, "base link cannot be a joint child"))
        if j.child in parent_of:
            out.append(Violation("structural", subj,
                                 f"link {j.child!r} already has parent joint {parent_of[j.child][0]!r}"))
        else:
            parent_of[j.child] = (j.id, j.parent)
        n = math.sqrt(sum(a * a for a in j.axis))
        if abs(n - 1.0) > 1e-9:
            out.append(Violation("invariant", subj, f"axis norm {n:.12g} is not 1"))
        lo, hi = j.limits
        if not lo <= 0.0 <= hi:
            out.append(Violation("invariant", subj,
                                 f"limits ({lo}, {hi}) exclude the zero posture"))

    cyclic = set()
    for link in size.links:
        seen = [link]
        cur = link
        while cur in parent_of:
            cur = parent_of[cur][1]
            if cur in seen:
                cyclic.update(seen[seen.index(cur):])
                break
            seen.append(cur)
    for link in sorted(cyclic):
        out.append(Violation("structural", f"link {link}", "joint graph contains a cycle"))
    for link in size.links:
        if link in cyclic or link == size.base:
            continue
        cur = link
        while cur in parent_of and cur not in cyclic:
            cur = parent_of[cur][1]
        if cur != size.base and cur not in cyclic:
            out.append(Violation("structural", f"link {link}", "not reachable from the base"))

    for name, lm in size.landmarks.items():
        if lm.link not in links:
            out.append(Violation("structural", f"landmark {name}",
                                 f"link {lm.link!r} does not exist"))

    if shape is not None:
        for key, patch in shape.patches.items():
            subj = f"patch {key}"
            if patch.link not in links:
                out.append(Violation("structural", subj, f"link {patch.link!r} does not exist"))
            if not patch.taxels:
                out.append(Violation("invariant", subj, "patch has no taxels"))
            seen_ids = set()
            for t in patch.taxels:
                if t.id in seen_ids:
                    out.append(Violation("invariant", subj, f"duplicate taxel id {t.id}"))
                seen_ids.add(t.id)
            if patch.landmarks is not None:
                for lm in patch.landmarks:
                    if lm not in size.landmarks:
                        out.append(Violation("structural", subj, f"landmark {lm!r} does not exist"))
    return out


def _raise_first(violations):
    for v in violations:
        if v.kind == "structural":
            raise StructuralError(v.subject, v.message)
    for v in violations:
        raise InvariantError(v.subject, v.message)


# -- parsing ------------------------------------------------------------------

def _vec3(value, where):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise SpecError(where, "expected a list of 3 numbers")
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise SpecError(where, "expected a list of 3 numbers") from None
    if not all(math.isfinite(v) for v in out):
        raise SpecError(where, "values must be finite")
    return out


def _require(doc, key, where, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise SpecError(f"{where}.{key}" if where else key, "missing required field")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise SpecError(f"{where}.{key}" if where else key,
                        f"expected {kind.__name__ if isinstance(kind, type) else 'a different type'}")
    return value


def _parse_pose(doc, where) -> Pose:
    if doc is None:
        return Pose.identity()
    if not isinstance(doc, dict):
        raise SpecError(where, "expected an object with quat and xyz_mm")
    quat = doc.get("quat", [1.0, 0.0, 0.0, 0.0])
    if not isinstance(quat, (list, tuple)) or len(quat) != 4:
        raise SpecError(f"{where}.quat", "expected [w, x, y, z]")
    try:
        rot = Rotation(*quat)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}.quat", str(exc)) from None
    return Pose(rot, _vec3(doc.get("xyz_mm", [0.0, 0.0, 0.0]), f"{where}.xyz_mm"))


def _parse_patch(doc, i) -> SkinPatch:
    where = f"skin_patches[{i}]"
    link = _require(doc, "link", where, str)
    grid = None
    if "grid" in doc:
        g = doc["grid"]
        gw = f"{where}.grid"
        rows = _require(g, "rows", gw, int)
        cols = _require(g, "cols", gw, int)
        spacing = _require(g, "spacing_mm", gw)
        if isinstance(spacing, (int, float)):
            spacing = (float(spacing), float(spacing))
        elif isinstance(spacing, (list, tuple)) and len(spacing) == 2:
            spacing = (float(spacing[0]), float(spacing[1]))
        else:
            raise SpecError(f"{gw}.spacing_mm", "expected a number or [along, across]")
        if rows < 1 or cols < 1:
            raise SpecError(gw, "rows and cols must be >= 1")
        origin = _vec3(g.get("origin_mm", [0.0, 0.0, 0.0]), f"{gw}.origin_mm")
        first = int(g.get("first_id", 0))
        taxels = tuple(
            Taxel(first + r * cols + c, link,
                  (origin[0] + r * spacing[0], origin[1] + c * spacing[1], origin[2]))
            for r in range(rows) for c in range(cols)
        )
        grid = GridInfo(rows, cols, spacing)
    elif "taxels" in doc:
        raw = doc["taxels"]
        if not isinstance(raw, list):
            raise SpecError(f"{where}.taxels", "expected a list")
        taxels = []
        for k, t in enumerate(raw):
            tid = _require(t, "id", f"{where}.taxels[{k}]", int)
            taxels.append(Taxel(tid, link, _vec3(_require(t, "xyz_mm", f"{where}.taxels[{k}]"),
                                                 f"{where}.taxels[{k}].xyz_mm")))
        taxels = tuple(taxels)
    else:
        raise SpecError(where, "needs either 'grid' or 'taxels'")
    landmarks = doc.get("landmarks")
    if landmarks is not None:
        if (not isinstance(landmarks, list) or len(landmarks) != 2
                or not all(isinstance(x, str) for x in landmarks)):
            raise SpecError(f"{where}.landmarks", "expected [proximal, distal] landmark ids")
        landmarks = tuple(landmarks)
    bias = _vec3(doc.get("bias_mm", [0.0, 0.0, 0.0]), f"{where}.bias_mm")
    return SkinPatch(link, taxels, grid, bias, landmarks)


def parse_distortion(doc, where="distortion") -> DistortionMap:
    """Parse ``{"links": {link: {axis: scale}}, "patch_bias_mm": {link: [x, y, z]}}``."""
    if doc is None:
        return DistortionMap()
    if not isinstance(doc, dict):
        raise SpecError(where, "expected an object")
    scales = {}
    for link, s in (doc.get("links") or {}).items():
        if isinstance(s, (list, tuple)):
            vals = _vec3(s, f"{where}.links.{link}")
        elif isinstance(s, dict):
            unknown = set(s) - set(AXIS_NAMES)
            if unknown:
                raise SpecError(f"{where}.links.{link}.{sorted(unknown)[0]}", "unknown axis name")
            vals = tuple(float(s.get(a, 1.0)) for a in AXIS_NAMES)
        else:
            raise SpecError(f"{where}.links.{link}", "expected axis scales")
        scales[link] = vals
    biases = {link: _vec3(b, f"{where}.patch_bias_mm.{link}")
              for link, b in (doc.get("patch_bias_mm") or {}).items()}
    d = DistortionMap(scales, biases)
    d.validate()
    return d


def _order_joints(joints, base):
    """Topological order from the base; unreachable joints keep input order at the end."""
    by_parent = {}
    for j in joints:
        by_parent.setdefault(j.parent, []).append(j)
    ordered, seen = [], set()
    stack = [base]
    while stack:
        link = stack.pop(0)
        for j in by_parent.get(link, []):
            if j.id not in seen:
                seen.add(j.id)
                ordered.append(j)
                stack.append(j.child)
    ordered.extend(j for j in joints if j.id not in seen)
    return tuple(ordered)


def load_body_spec(document, strict: bool = True):
    """Build ``(BodySizeModel, BodyShapeModel)`` from a parsed body spec.

    With ``strict`` the first invariant violation is raised; otherwise the
    models are returned as parsed so ``validate_model`` can list problems.
    """
    if not isinstance(document, dict):
        raise SpecError("<root>", "expected a JSON object")
    links = _require(document, "links", "", list)
    if not links or not all(isinstance(x, str) for x in links):
        raise SpecError("links", "expected a non-empty list of link ids")
    if len(set(links)) != len(links):
        raise SpecError("links", "duplicate link id")
    base = document.get("base", links[0])

    joints, ids = [], set()
    for i, jd in enumerate(_require(document, "joints", "", list)):
        where = f"joints[{i}]"
        jid = _require(jd, "id", where, str)
        if jid in ids:
            raise SpecError(f"{where}.id", f"duplicate joint id {jid!r}")
        ids.add(jid)
        limits = jd.get("limits_rad", [-math.pi, math.pi])
        if not isinstance(limits, (list, tuple)) or len(limits) != 2:
            raise SpecError(f"{where}.limits_rad", "expected [min, max]")
        joints.append(Joint(
            jid,
            _require(jd, "parent", where, str),
            _require(jd, "child", where, str),
            _vec3(_require(jd, "axis", where), f"{where}.axis"),
            _parse_pose(jd.get("pre_transform"), f"{where}.pre_transform"),
            (float(limits[0]), float(limits[1])),
        ))

    landmarks = {}
    raw_lm = document.get("landmarks", {})
    if not isinstance(raw_lm, dict):
        raise SpecError("landmarks", "expected an object")
    for name, ld in raw_lm.items():
        landmarks[name] = Landmark(_require(ld, "link", f"landmarks.{name}", str),
                                   _vec3(ld.get("xyz_mm", [0, 0, 0]), f"landmarks.{name}.xyz_mm"))

    patches = {}
    raw_patches = document.get("skin_patches", [])
    if not isinstance(raw_patches, list):
        raise SpecError("skin_patches", "expected a list")
    for i, pd in enumerate(raw_patches):
        patch = _parse_patch(pd, i)
        if patch.link in patches:
            raise SpecError(f"skin_patches[{i}].link", f"second patch on link {patch.link!r}")
        patches[patch.link] = patch

    size = BodySizeModel(base, tuple(links), _order_joints(joints, base), landmarks,
                         str(document.get("name", "body")))
    shape = BodyShapeModel(patches)
    if strict:
        _raise_first(validate_model(size, shape))
    return size, shape


def load_body_file(path, strict: bool = True):
    """Load a body spec from a JSON file or a builtin name (``planar_arm``, ``hand``)."""
    doc = read_body_document(path)
    return load_body_spec(doc, strict=strict)


def read_body_document(path) -> dict:
    if str(path) in BUILTIN_BODIES:
        text = resources.files("bodyschema").joinpath(f"data/{path}.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"<json line {exc.lineno}>", exc.msg) from None


def default_body():
    """The embedded planar-arm body (veridical models)."""
    return load_body_file("planar_arm")


# -- distortion ---------------------------------------------------------------

def _scaled(v, s):
    return (v[0] * s[0], v[1] * s[1], v[2] * s[2])


def apply_distortion(size: BodySizeModel, shape: BodyShapeModel, d: DistortionMap):
    """Return the stored (perceived) models for distortion ``d``.

    Translations of joints hanging off a link, landmark offsets and taxel
    positions on that link are scaled per-axis in the link frame. Patch
    biases are accumulated on the patches; they only take effect in
    silhouette-mode somatic localization.
    """
    d.validate()
    joints = tuple(
        replace(j, pre_transform=Pose(j.pre_transform.rotation,
                                      _scaled(j.pre_transform.translation, d.scale_for(j.parent))))
        if j.parent in d.scales else j
        for j in size.joints
    )
    landmarks = {name: Landmark(lm.link, _scaled(lm.offset, d.scale_for(lm.link)))
                 for name, lm in size.landmarks.items()}
    patches = {}
    for key, patch in shape.patches.items():
        s = d.scale_for(patch.link)
        taxels = tuple(Taxel(t.id, t.link, _scaled(t.position, s)) for t in patch.taxels)
        b = d.biases.get(key, (0.0, 0.0, 0.0))
        bias = tuple(patch.bias[i] + b[i] for i in range(3))
        patches[key] = replace(patch, taxels=taxels, bias=bias)
    return replace(size, joints=joints, landmarks=landmarks), BodyShapeModel(patches)


def link_length(size: BodySizeModel, link: str) -> float:
    """Distance from a link's origin to the origin of its (first) child joint."""
    for j in size.joints:
        if j.parent == link:
            return float(np.linalg.norm(j.pre_transform.translation))
    raise KeyError(link)
