"""Exception types shared across the toolkit.

Every error raised by the core modules derives from ForbalError so callers
(CLI, HTTP service) can map failures to exit codes / status payloads in one
place.
"""

from __future__ import annotations


class ForbalError(Exception):
    """Base class for all toolkit errors."""

    #: short machine-readable code, used by the service layer
    code = "error"


class ConfigError(ForbalError):
    code = "config"


class Unreachable(ForbalError):
    """Target lies outside the reachable set (cosine-rule argument out of range)."""

    code = "unreachable"

    def __init__(self, message: str, margin: float | None = None):
        super().__init__(message)
        self.margin = margin


class Singular(ForbalError):
    """Forward kinematics at a tangent-circle (stretched/folded) configuration."""

    code = "singular"


class SingularConfiguration(ForbalError):
    """Loop-rate solve is degenerate (distal links collinear)."""

    code = "singular_configuration"


class LimitViolation(ForbalError):
    code = "limit_violation"


class YawSingularity(ForbalError):
    """Spatial target on the base rotation axis: yaw joint angle undefined."""

    code = "yaw_singularity"


class PitchSingularity(ForbalError):
    code = "pitch_singularity"


class InfeasibleMounting(ForbalError):
    """Balance solution requires a negative counter mass."""

    code = "infeasible_mounting"


class MissingProfile(ForbalError):
    code = "missing_profile"


class DuplicateTime(ForbalError):
    code = "duplicate_time"


class InfeasibleLaw(ForbalError):
    """Speed law ramps do not fit in the trajectory duration."""

    code = "infeasible_law"


class UnknownId(ForbalError):
    code = "unknown_id"


class MismatchedRuns(ForbalError):
    code = "mismatched_runs"


class DefaultPoseInvalid(ForbalError):
    code = "default_pose_invalid"


class AxisIntersects(ForbalError):
    """Workspace cross-section touches or crosses the revolution axis."""

    code = "axis_intersects"
