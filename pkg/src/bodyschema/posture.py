"""Short-term postural schema: per-joint Gaussian posterior over joint angles.

Cues (postural prior, proprioceptive afference, efference copy) are fused by
precision weighting. Cues enter only once their latency has elapsed, so
early estimates fall back on the canonical-posture prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import EstimationError


def _std(std, joint):
    if isinstance(std, dict):
        return std.get(joint)
    return std


@dataclass(frozen=True)
class PosturalPrior:
    """Canonical-posture prior; joints missing from ``mean`` default to 0 rad."""

    std: dict[str, float] | float
    mean: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        values = self.std.values() if isinstance(self.std, dict) else [self.std]
        if any(not s > 0.0 for s in values):
            raise ValueError("prior std must be > 0")

    def gaussian(self, joint):
        s = _std(self.std, joint)
        if s is None:
            return None
        return self.mean.get(joint, 0.0), s


@dataclass(frozen=True)
class _Cue:
    angles: dict[str, float]
    std: dict[str, float] | float
    latency_ms: float = 0.0

    def __post_init__(self):
        values = self.std.values() if isinstance(self.std, dict) else [self.std]
        if any(not s > 0.0 for s in values):
            raise ValueError(f"{type(self).__name__} std must be > 0")
        if not self.latency_ms >= 0.0:
            raise ValueError("latency must be >= 0")

    def gaussian(self, joint):
        if joint not in self.angles:
            return None
        s = _std(self.std, joint)
        if s is None:
            raise ValueError(f"no std given for joint {joint!r}")
        return self.angles[joint], s


class ProprioceptiveCue(_Cue):
    """Noisy, delayed afferent joint angles."""

    label = "afference"


class EfferenceCopy(_Cue):
    """Predicted joint angles from the motor command; usually available at once."""

    label = "efference"


@dataclass(frozen=True)
class PosteriorPosture:
    mean: dict[str, float]
    variance: dict[str, float]
    precision: dict[str, float]
    timestamp: float
    sources: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def std(self):
        return {j: math.sqrt(v) for j, v in self.variance.items()}


def _fuse(gaussians):
    """Fuse ``(mean, std)`` pairs; returns ``(mean, variance, precision)``."""
    if len(gaussians) == 1:
        mu, s = gaussians[0]
        return mu, s * s, 1.0 / (s * s)
    precisions = [1.0 / (s * s) for _, s in gaussians]
    precision = math.fsum(precisions)
    mean = math.fsum(mu * p for (mu, _), p in zip(gaussians, precisions)) / precision
    means = [mu for mu, _ in gaussians]
    mean = min(max(mean, min(means)), max(means))
    return mean, 1.0 / precision, precision


def fuse_cues(prior: PosturalPrior | None, cues, joint: str) -> tuple[float, float]:
    """Precision-weighted Gaussian fusion for one joint; returns ``(mean, variance)``.

    ``cues`` are the cues that have already arrived; cues that carry no
    value for ``joint`` are skipped.
    """
    mean, var, _ = _fuse_joint(prior, cues, joint)[:3]
    return mean, var


def _fuse_joint(prior, cues, joint):
    gaussians, names = [], []
    if prior is not None:
        g = prior.gaussian(joint)
        if g is not None:
            gaussians.append(g)
            names.append("prior")
    for cue in cues:
        g = cue.gaussian(joint)
        if g is not None:
            gaussians.append(g)
            names.append(getattr(cue, "label", type(cue).__name__))
    if not gaussians:
        raise EstimationError(f"no prior and no arrived cue for joint {joint!r}")
    return (*_fuse(gaussians), tuple(names))


def estimate_posture_at(t: float, prior: PosturalPrior | None, afference: ProprioceptiveCue | None,
                        efference: EfferenceCopy | None = None, joints=None) -> PosteriorPosture:
    """Posterior posture at time ``t`` (ms) using the cues with latency <= t."""
    if t < 0:
        raise ValueError("query time must be >= 0")
    arrived = [c for c in (efference, afference) if c is not None and c.latency_ms <= t]
    if joints is None:
        names = set()
        if prior is not None:
            names.update(prior.mean)
            if isinstance(prior.std, dict):
                names.update(prior.std)
        for c in (afference, efference):
            if c is not None:
                names.update(c.angles)
        joints = sorted(names)
    mean, var, prec, src = {}, {}, {}, {}
    for j in joints:
        mean[j], var[j], prec[j], src[j] = _fuse_joint(prior, arrived, j)
    return PosteriorPosture(mean, var, prec, float(t), src)
