"""Exception hierarchy shared by every stage of the pipeline."""


class AmlpError(ValueError):
    """Base class for domain errors; ``module`` names the raising stage."""

    module = "amlp"


class LinAlgError(AmlpError):
    module = "linalg"


class NotPositiveDefiniteError(LinAlgError):
    pass


class ConvergenceError(AmlpError):
    module = "linalg"

    def __init__(self, message, iterations_used=None):
        super().__init__(message)
        self.iterations_used = iterations_used


class ProfileError(AmlpError):
    module = "profiling"


class ParseError(ProfileError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ReducerError(AmlpError):
    module = "drt"


class IcaConvergenceError(ConvergenceError):
    module = "drt"


class ClusterError(AmlpError):
    module = "cluster"


class ValidationIndexError(AmlpError):
    module = "validate"


class DuplicateCentroidsError(ValidationIndexError):
    pass


class GridConfigError(AmlpError):
    module = "harness"


class ConfigError(AmlpError):
    module = "config"
