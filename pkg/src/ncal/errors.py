"""Exception types shared across the toolkit."""


class NcalError(Exception):
    """Base class for all toolkit errors."""


class BehindCamera(NcalError):
    """A 3D point lies at or behind the camera's projection plane."""


class DegenerateRotation(NcalError):
    """A 6D rotation vector cannot be orthogonalized (zero or parallel columns)."""


class DegenerateLookAt(NcalError):
    """Look-at construction failed: eye equals target or up is parallel to view."""


class SynthesisStalled(NcalError):
    """Pose rejection rate too high; the rig/object/radius combination is infeasible."""


class BadObjectFile(NcalError):
    """A calibration-object or rig definition file is malformed."""


class ShapeMismatch(NcalError):
    """Tensor or array shapes are inconsistent with the operation's contract."""


class GraphCycle(NcalError):
    """The autodiff graph contains a cycle (impossible by construction; indicates a bug)."""


class CorruptCheckpoint(NcalError):
    """Checkpoint file failed magic, hash, or structural validation."""


class UnsupportedVersion(CorruptCheckpoint):
    """Checkpoint format version is not supported by this build."""


class NonFiniteLoss(NcalError):
    """Training produced a NaN/inf loss value."""

    def __init__(self, epoch, batch_seed, message=None):
        self.epoch = epoch
        self.batch_seed = batch_seed
        super().__init__(
            message or f"non-finite loss at epoch {epoch} (batch seed {batch_seed})"
        )


class SingularNormalEquations(NcalError):
    """The damped normal equations are rank deficient.

    `deficient_indices` lists the offending free-parameter columns.
    """

    def __init__(self, deficient_indices, message=None):
        self.deficient_indices = list(deficient_indices)
        super().__init__(
            message
            or f"normal equations singular; zero-influence columns: {self.deficient_indices}"
        )


class ConfigError(NcalError):
    """Run configuration is invalid or inconsistent."""
