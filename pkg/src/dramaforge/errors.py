"""Exception hierarchy shared across the pipeline."""


class DramaError(Exception):
    """Base class for all engine errors."""


class PreconditionError(DramaError):
    """An operation was called with inputs that violate its contract."""


# --- provider boundary ------------------------------------------------------

class ProviderError(DramaError):
    """A provider call failed in a non-retryable way."""


class ProviderTimeout(ProviderError):
    pass


class ProviderSchemaError(ProviderError):
    """Provider output failed schema validation after the retry budget."""


class FixtureMissError(ProviderError):
    """strict_replay mode hit a request with no recorded fixture."""

    def __init__(self, role: str, request_hash: str):
        super().__init__(f"no fixture for role={role} request={request_hash}")
        self.role = role
        self.request_hash = request_hash


# --- retrieval --------------------------------------------------------------

class EmptyBankError(DramaError):
    pass


class CopyViolationError(DramaError):
    """An atom copied a verbatim span longer than the configured limit."""


# --- story / clip review ----------------------------------------------------

class PatchTargetError(DramaError):
    """A revision patch targets a scene or line that does not exist."""


class PartitionViolationError(DramaError):
    """A rewrite touched clips outside its allowed partition."""


class UnknownAssetError(DramaError):
    """A clip references a character/location/prop id absent from assets."""


class AuditExhaustedError(DramaError):
    """All audit attempts failed; carries the best-scoring attempt."""

    def __init__(self, message: str, best_attempt=None):
        super().__init__(message)
        self.best_attempt = best_attempt


# --- geometry ---------------------------------------------------------------

class DegenerateDepthError(DramaError):
    """Too few jointly valid depth pixels to align or register."""


class PlacementFailure(DramaError):
    """Character placement could not reach the minimum silhouette IoU."""


class NoCandidateError(DramaError):
    """Every camera candidate (or BGM bucket) was rejected/empty."""


class NoImprovementWarning(UserWarning):
    """Pose refinement found no candidate better than the initial pose."""


# --- audio ------------------------------------------------------------------

class TooShortError(DramaError):
    """Audio shorter than the minimum measurable duration."""


# --- orchestration ----------------------------------------------------------

class StageFatalError(DramaError):
    """A pipeline stage failed after its retry budget; manifest preserved."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class ManifestCorruptError(DramaError):
    """A persisted stage artifact does not match its recorded hash."""


class MissingArtifactError(DramaError):
    """Final assembly found a required artifact missing."""


class IncompleteRunError(DramaError):
    """Evaluation requested on a run that has not completed."""
