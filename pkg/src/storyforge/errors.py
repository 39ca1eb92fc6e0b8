"""Exception types shared across the package."""

from __future__ import annotations


class StoryforgeError(Exception):
    """Base class for all package-specific errors."""


# --- grid / legend parsing ---------------------------------------------------

class NoFenceError(StoryforgeError):
    """No triple-backtick fenced block was found in the text."""


class EmptyGridError(StoryforgeError):
    """A grid (or fenced block) contains no usable cells."""


class NoDictError(StoryforgeError):
    """No parseable dict literal was found in the text."""


class DuplicateCharError(StoryforgeError):
    """Two legend entries map to the same character."""

    def __init__(self, first: str, second: str, char: str) -> None:
        super().__init__(f"legend entries {first!r} and {second!r} share char {char!r}")
        self.names = (first, second)
        self.char = char


class MissingReservedError(StoryforgeError):
    """A reserved character ('@' or '#') has no legend entry."""

    def __init__(self, char: str) -> None:
        super().__init__(f"legend has no entry for reserved char {char!r}")
        self.char = char


class MultiCharValueError(StoryforgeError):
    """A legend entry's value is not exactly one character."""

    def __init__(self, name: str, value: object) -> None:
        super().__init__(f"legend entry {name!r} has non-single-char value {value!r}")
        self.name = name


class InvalidTileCharError(StoryforgeError):
    """A tile character is whitespace or not printable."""


class OutOfBoundsError(StoryforgeError):
    """A position lies outside the grid."""


# --- search ------------------------------------------------------------------

class NotFoundError(StoryforgeError):
    """A search exhausted the grid without an acceptable cell."""


# --- scaling / structures ----------------------------------------------------

class MissingTemplateError(StoryforgeError):
    """No structure template exists for a (tile, footprint) pair."""

    def __init__(self, tile: str, size: int) -> None:
        super().__init__(f"no structure template for tile {tile!r} at footprint {size}")
        self.tile = tile
        self.size = size


# --- metrics -----------------------------------------------------------------

class EmptyCorpusError(StoryforgeError):
    """An evaluation was requested over zero maps."""


class NoVotesError(StoryforgeError):
    """A composite score was requested over an all-zero vote vector."""


# --- export ------------------------------------------------------------------

class MissingBlockMappingError(StoryforgeError):
    """A grid character has no block-table entry."""

    def __init__(self, char: str) -> None:
        super().__init__(f"no block mapping for tile char {char!r}")
        self.char = char


class EmptyInputError(StoryforgeError):
    """Rendering was requested for an empty grid or block world."""


# --- sub-maps ----------------------------------------------------------------

class BadSizeError(StoryforgeError):
    """A sub-map size violates its generator's constraints."""


# --- pipeline / backends -----------------------------------------------------

class BackendError(StoryforgeError):
    """A text backend failed to produce a response."""


class ReplayMissError(BackendError):
    """The replay fixture holds no record for a prompt digest."""

    def __init__(self, digest: str) -> None:
        super().__init__(f"replay fixture has no record for digest {digest}")
        self.digest = digest


class EmbedUnsupportedError(BackendError):
    """The backend does not implement embeddings."""


class MissingApiKeyError(BackendError):
    """The live backend was selected without STORYFORGE_API_KEY set."""


class MalformedStoryError(StoryforgeError):
    """Story generation produced unusable text after all retries."""


class ParseFailureError(StoryforgeError):
    """A pipeline stage could not parse the backend response after retries."""


class UnknownTileError(StoryforgeError):
    """An extracted tile set references a char absent from the legend."""

    def __init__(self, char: str, role: str) -> None:
        super().__init__(f"{role} set references char {char!r} not present in the legend")
        self.char = char


class EmptyObjectivesError(StoryforgeError):
    """Objective placement produced no usable objectives after retries."""
