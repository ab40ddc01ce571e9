"""Exception types raised by the body-model engine."""


class BodySchemaError(Exception):
    """Base class for every error raised by this package."""


class SpecError(BodySchemaError, ValueError):
    """A body spec or scenario document does not match its schema.

    ``field`` holds a dotted path to the offending entry, e.g.
    ``joints[1].axis``.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class StructuralError(SpecError):
    """Cyclic joint graph or a reference to a link that does not exist."""


class InvariantError(SpecError):
    """A value is well formed but violates a model invariant."""


class ScenarioError(SpecError):
    """An experiment scenario is inconsistent with its task or body."""


class StateError(BodySchemaError, ValueError):
    """A joint state is incomplete or outside the joint limits."""


class UnknownTaxelError(BodySchemaError, KeyError):
    def __init__(self, taxel_id):
        self.taxel_id = taxel_id
        super().__init__(f"unknown taxel id {taxel_id!r}")

    def __str__(self):
        return self.args[0]


class UnknownLandmarkError(BodySchemaError, KeyError):
    def __init__(self, landmark):
        self.landmark = landmark
        super().__init__(f"unknown landmark {landmark!r}")

    def __str__(self):
        return self.args[0]


class AmbiguousTouchError(BodySchemaError, ValueError):
    """Active taxels resolve to more than one skin patch."""


class ConfigurationError(BodySchemaError, ValueError):
    """A patch lacks the landmark pair needed for triangulation."""


class DegenerateSegmentError(BodySchemaError, ValueError):
    """The two landmarks bounding a patch coincide."""


class EstimationError(BodySchemaError, ValueError):
    """No prior and no arrived cue for a joint."""
