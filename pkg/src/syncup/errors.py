"""Exception types shared across the engine."""


class SyncupError(Exception):
    """Base class for all engine errors."""


# --- pose stream ingestion ---------------------------------------------------

class MalformedRecord(SyncupError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"malformed record at line {line_no}" + (f": {reason}" if reason else ""))


class NonMonotonicTime(SyncupError):
    def __init__(self, frame_index: int):
        self.frame_index = frame_index
        super().__init__(f"time_ms decreases at frame {frame_index}")


class BadKeypointCount(SyncupError):
    def __init__(self, frame_index, count: int):
        self.frame_index = frame_index
        self.count = count
        super().__init__(f"skeleton with {count} keypoints (need 18) in frame {frame_index}")


class EmptyRecording(SyncupError):
    pass


# --- audio / beats -----------------------------------------------------------

class AudioTooShort(SyncupError):
    pass


class EnvelopeTooShort(SyncupError):
    pass


class NoTempoFound(SyncupError):
    pass


class TooFewBeats(SyncupError):
    pass


class LowCorrelation(SyncupError):
    def __init__(self, peak: float, threshold: float):
        self.peak = peak
        self.threshold = threshold
        super().__init__(f"peak normalized correlation {peak:.3f} below {threshold:.3f}; different music suspected")


# --- similarity / training ---------------------------------------------------

class TooFewSamples(SyncupError):
    pass


class TooFewRatings(SyncupError):
    pass


class UntrainedModel(SyncupError):
    pass


class SingleSource(SyncupError):
    pass


class DegenerateVariance(SyncupError):
    pass


# --- temporal alignment ------------------------------------------------------

class TooShort(SyncupError):
    pass


class InsufficientContext(SyncupError):
    pass


# --- service -----------------------------------------------------------------

class NotFound(SyncupError):
    pass


class VersionMismatch(SyncupError):
    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"artifact format version {found}, expected {expected}")


class SegmentCountMismatch(SyncupError):
    pass


class AnalysisError(SyncupError):
    """Pipeline failure with stage attribution; partial results stay on the session."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"analysis failed at stage '{stage}': {cause}")
