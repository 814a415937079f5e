"""Exception hierarchy shared across the engine."""


class ArtpressError(Exception):
    """Base class for all engine errors."""


# --- retrieval / store ---

class EmptyText(ArtpressError):
    pass


class DimensionMismatch(ArtpressError):
    pass


class ZeroVector(ArtpressError):
    pass


class ParseError(ArtpressError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateId(ArtpressError):
    pass


class InvalidKind(ArtpressError):
    pass


class MissingPlaceholder(ArtpressError):
    pass


class NoCandidates(ArtpressError):
    pass


# --- enhancement / backends ---

class EmptyBase(ArtpressError):
    pass


class BackendTimeout(ArtpressError):
    pass


class HttpError(ArtpressError):
    def __init__(self, status, message=""):
        super().__init__(f"HTTP {status}: {message}" if message else f"HTTP {status}")
        self.status = status


class MalformedResponse(ArtpressError):
    pass


class RetriesExhausted(ArtpressError):
    def __init__(self, attempts, last_error):
        super().__init__(f"gave up after {attempts} attempts: {last_error}")
        self.attempts = attempts
        self.last_error = last_error


# --- imaging ---

class DecodeError(ArtpressError):
    pass


class SizeOverflow(ArtpressError):
    pass


class ImageDimensionMismatch(ArtpressError):
    pass


# --- metrics / telemetry ---

class TooSmall(ArtpressError):
    pass


class NonMonotonicTime(ArtpressError):
    pass


class RangeError(ArtpressError):
    pass


class EmptySamples(ArtpressError):
    pass


class TooFewSamples(ArtpressError):
    pass


# --- bench / pipeline ---

class EmptyCorpus(ArtpressError):
    pass


class ConfigError(ArtpressError):
    pass
