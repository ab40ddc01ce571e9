"""Somatic and spatial localization of touch and of body landmarks.

Touch is first looked up on the skin (somatic localization, link-local mm),
then remapped into the body-centred base frame either through the touched
link's frame (single landmark) or by fusing distance cues to the two
landmarks bounding the patch (triangulation).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .body import BodyShapeModel, BodySizeModel, SkinPatch
from .errors import (AmbiguousTouchError, ConfigurationError, DegenerateSegmentError,
                     StateError, UnknownLandmarkError, UnknownTaxelError)
from .geometry import Pose, Rotation, compose, invert, transform_point
from .noise import NoiseModel

log = logging.getLogger(__name__)

POINTING = "pointing"
SILHOUETTE = "silhouette"
MODES = (POINTING, SILHOUETTE)

SINGLE = "single"
TRIANGULATION = "triangulation"
VARIANTS = (SINGLE, TRIANGULATION)

VARIANCE_FLOOR = 1e-12  # mm^2


@dataclass(frozen=True)
class JointState:
    angles: dict[str, float] = field(default_factory=dict)
    timestamp: float = 0.0


@dataclass(frozen=True)
class TouchEvent:
    """Active taxels as ``(taxel id, intensity)`` pairs.

    Taxel ids are only unique within a patch; pass ``link`` when the same id
    exists on several patches.
    """

    taxels: tuple[tuple[int, float], ...]
    onset: float = 0.0
    link: str | None = None

    def __post_init__(self):
        taxels = tuple((int(i), float(w)) for i, w in self.taxels)
        object.__setattr__(self, "taxels", taxels)
        if not taxels:
            raise ValueError("touch needs at least one active taxel")
        if any(w < 0.0 for _, w in taxels):
            raise ValueError("taxel intensities must be >= 0")
        if all(w == 0.0 for _, w in taxels):
            raise ValueError("taxel intensities are all zero")

    @classmethod
    def single(cls, taxel_id: int, link: str | None = None) -> TouchEvent:
        return cls(((taxel_id, 1.0),), link=link)


@dataclass(frozen=True)
class LocalizationResult:
    link: str
    local: np.ndarray
    spatial: np.ndarray
    variant: str
    mode: str

    @property
    def somatic(self):
        return (self.link, self.local)


# -- somatic localization -----------------------------------------------------

def _resolve_patch(t: TouchEvent, shape: BodyShapeModel) -> SkinPatch:
    if t.link is not None:
        if t.link not in shape.patches:
            raise UnknownTaxelError(f"{t.link}:{t.taxels[0][0]}")
        return shape.patches[t.link]
    links = set()
    for tid, _ in t.taxels:
        owners = shape.owners.get(tid, [])
        if not owners:
            raise UnknownTaxelError(tid)
        if len(owners) > 1:
            raise AmbiguousTouchError(
                f"taxel id {tid} exists on patches {sorted(owners)}; specify the link")
        links.add(owners[0])
    if len(links) > 1:
        raise AmbiguousTouchError(f"touch spans several links: {sorted(links)}")
    return shape.patches[links.pop()]


def somatic_localization(t: TouchEvent, shape: BodyShapeModel, mode: str = POINTING):
    """Return ``(link, local mm)``: intensity-weighted centroid of the active taxels.

    In silhouette mode the patch's constant bias is added.
    """
    if mode not in MODES:
        raise ValueError(f"unknown response mode {mode!r}")
    patch = _resolve_patch(t, shape)
    total = 0.0
    acc = np.zeros(3)
    for tid, w in t.taxels:
        try:
            taxel = patch.taxel(tid)
        except KeyError:
            raise UnknownTaxelError(tid) from None
        acc += w * np.asarray(taxel.position)
        total += w
    local = acc / total
    if mode == SILHOUETTE:
        local = local + np.asarray(patch.bias)
    return patch.link, local


# -- kinematics ---------------------------------------------------------------

def default_posture(size: BodySizeModel) -> JointState:
    return JointState({j.id: 0.0 for j in size.joints}, 0.0)


def check_state(size: BodySizeModel, s: JointState, allow_default: bool = False) -> dict[str, float]:
    """Validate a joint state; returns the complete angle map.

    Missing joints raise unless ``allow_default``, in which case they take
    the canonical zero angle and a notice is logged.
    """
    known = set(size.joint_ids)
    for jid in s.angles:
        if jid not in known:
            raise StateError(f"joint {jid!r} is not part of the body model")
    angles = {}
    missing = []
    for j in size.joints:
        if j.id in s.angles:
            a = float(s.angles[j.id])
            lo, hi = j.limits
            if not lo <= a <= hi:
                raise StateError(f"joint {j.id!r} angle {a} outside limits [{lo}, {hi}]")
            angles[j.id] = a
        else:
            missing.append(j.id)
            angles[j.id] = 0.0
    if missing:
        if not allow_default:
            raise StateError(f"missing angle for joint(s) {', '.join(missing)}")
        log.info("defaulting joint(s) %s to the zero posture", ", ".join(missing))
    return angles


def clamp_to_limits(size: BodySizeModel, angles) -> tuple[JointState, list[str]]:
    """Clamp angles into joint limits; returns the state and the clamped joint ids."""
    out, clamped = {}, []
    for j in size.joints:
        a = float(angles.get(j.id, 0.0))
        lo, hi = j.limits
        c = min(max(a, lo), hi)
        if c != a:
            clamped.append(j.id)
        out[j.id] = c
    return JointState(out), clamped


def forward_kinematics(size: BodySizeModel, s: JointState, allow_default: bool = False) -> dict[str, Pose]:
    """Pose of every link frame in the base frame.

    Each child frame is ``parent ∘ pre_transform ∘ rotation(axis, angle)``.
    """
    angles = check_state(size, s, allow_default)
    poses = {size.base: Pose.identity()}
    for j in size.joints:
        local = compose(j.pre_transform, Pose(Rotation.from_axis_angle(j.axis, angles[j.id])))
        poses[j.child] = compose(poses[j.parent], local)
    return poses


def _landmark_point(size, poses, landmark):
    try:
        lm = size.landmarks[landmark]
    except KeyError:
        raise UnknownLandmarkError(landmark) from None
    return transform_point(poses[lm.link], lm.offset)


def localize_landmark(size: BodySizeModel, s: JointState, landmark: str,
                      allow_default: bool = False) -> np.ndarray:
    if landmark not in size.landmarks:
        raise UnknownLandmarkError(landmark)
    return _landmark_point(size, forward_kinematics(size, s, allow_default), landmark)


# -- remapping ----------------------------------------------------------------

def spatial_from_local(poses, link: str, local) -> np.ndarray:
    return transform_point(poses[link], local)


def remap_touch_single(t: TouchEvent, size: BodySizeModel, shape: BodyShapeModel,
                       s: JointState, mode: str = POINTING) -> LocalizationResult:
    """Add the touched taxel offset to the pose of the patch's link frame."""
    link, local = somatic_localization(t, shape, mode)
    poses = forward_kinematics(size, s)
    return LocalizationResult(link, local, spatial_from_local(poses, link, local), SINGLE, mode)


@dataclass(frozen=True)
class Segment:
    """Landmark pair bounding a patch under one posture.

    ``proximal``/``axis``/``length`` are in the patch link frame; the
    ``world_*`` fields and ``rotation`` place the segment in the base frame.
    """

    proximal: np.ndarray
    axis: np.ndarray
    length: float
    world_proximal: np.ndarray
    world_axis: np.ndarray
    rotation: Rotation

    def split(self, local):
        """Return ``(u, perpendicular offset)`` of a link-local point."""
        rel = np.asarray(local, dtype=float) - self.proximal
        u = float(rel @ self.axis)
        return u, rel - u * self.axis

    def embed(self, u, perp) -> np.ndarray:
        return self.world_proximal + u * self.world_axis + np.asarray(self.rotation.rotate(perp))


def patch_segment(size: BodySizeModel, patch: SkinPatch, poses) -> Segment:
    if patch.landmarks is None:
        raise ConfigurationError(f"patch on link {patch.link!r} has no landmark pair")
    for lm in patch.landmarks:
        if lm not in size.landmarks:
            raise ConfigurationError(f"patch on link {patch.link!r}: unknown landmark {lm!r}")
    pw = _landmark_point(size, poses, patch.landmarks[0])
    dw = _landmark_point(size, poses, patch.landmarks[1])
    length = float(np.linalg.norm(dw - pw))
    if length == 0.0:
        raise DegenerateSegmentError(
            f"landmarks {patch.landmarks[0]!r} and {patch.landmarks[1]!r} coincide")
    to_link = invert(poses[patch.link])
    p = transform_point(to_link, pw)
    d = transform_point(to_link, dw)
    return Segment(p, (d - p) / np.linalg.norm(d - p), length, pw, (dw - pw) / length,
                   poses[patch.link].rotation)


def fuse_distance_cues(u: float, length: float, weber: float, z1: float, z2: float) -> float:
    """Precision-weighted along-axis estimate from two noisy landmark distances.

    ``z1``/``z2`` are standard normal draws; cue noise std is ``weber`` times
    the true distance to each landmark.
    """
    var1 = (weber * abs(u)) ** 2
    var2 = (weber * abs(length - u)) ** 2
    d1 = u + math.sqrt(var1) * z1
    d2 = (length - u) + math.sqrt(var2) * z2
    var1 = max(var1, VARIANCE_FLOOR)
    var2 = max(var2, VARIANCE_FLOOR)
    w1, w2 = 1.0 / var1, 1.0 / var2
    return (w1 * d1 + w2 * (length - d2)) / (w1 + w2)


def triangulate(seg: Segment, local, weber: float, z1: float, z2: float) -> np.ndarray:
    """Body-frame touch position from landmark distance cues plus the perpendicular offset."""
    u, perp = seg.split(local)
    return seg.embed(fuse_distance_cues(u, seg.length, weber, z1, z2), perp)


def remap_touch_triangulated(t: TouchEvent, size: BodySizeModel, shape: BodyShapeModel,
                             s: JointState, noise: NoiseModel | float, seed: int = 0,
                             mode: str = POINTING) -> LocalizationResult:
    """Localize touch by fusing distance cues to the patch's two landmarks.

    ``noise`` is a NoiseModel or a bare Weber fraction.
    """
    weber = noise if isinstance(noise, (int, float)) else noise.weber_fraction
    link, local = somatic_localization(t, shape, mode)
    patch = shape.patches[link]
    poses = forward_kinematics(size, s)
    z1, z2 = np.random.default_rng(seed).standard_normal(2)
    spatial = triangulate(patch_segment(size, patch, poses), local, float(weber), float(z1), float(z2))
    return LocalizationResult(link, local, spatial, TRIANGULATION, mode)
