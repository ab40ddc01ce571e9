from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class NoiseModel:
    """Sensory noise for simulated trials.

    ``joint_std`` maps joint id to afferent angle noise (rad); joints not
    listed use ``default_joint_std``. ``weber_fraction`` scales the noise of
    landmark distance cues with the true distance. ``taxel_jitter`` is the
    std (mm) of isotropic noise on the somatic touch location.
    """

    joint_std: dict[str, float] = field(default_factory=dict)
    default_joint_std: float = 0.0
    latency_ms: float = 0.0
    weber_fraction: float = 0.0
    taxel_jitter: float = 0.0

    def __post_init__(self):
        stds = [self.default_joint_std, self.taxel_jitter, *self.joint_std.values()]
        if any(not s >= 0.0 for s in stds):
            raise ValueError("noise standard deviations must be >= 0")
        if not self.weber_fraction >= 0.0:
            raise ValueError("weber_fraction must be >= 0")
        if not self.latency_ms >= 0.0:
            raise ValueError("latency_ms must be >= 0")

    def std_for(self, joint_id: str) -> float:
        return self.joint_std.get(joint_id, self.default_joint_std)


NOISELESS = NoiseModel()
