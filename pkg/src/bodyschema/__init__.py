"""Body-model engine: tactile remapping, postural schema and somatoperception experiments."""

__version__ = "0.1.0"

from .body import (BodyShapeModel, BodySizeModel, DistortionMap, Joint, Landmark, SkinPatch,
                   Taxel, apply_distortion, default_body, load_body_file, load_body_spec,
                   parse_distortion, validate_model)
from .geometry import Pose, Rotation, compose, invert, rz, transform_point
from .noise import NoiseModel
from .pipeline import (JointState, LocalizationResult, TouchEvent, default_posture,
                       forward_kinematics, localize_landmark, remap_touch_single,
                       remap_touch_triangulated, somatic_localization)
from .posture import (EfferenceCopy, PosteriorPosture, PosturalPrior, ProprioceptiveCue,
                      estimate_posture_at, fuse_cues)
