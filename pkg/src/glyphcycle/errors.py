"""Exception hierarchy shared across the package."""


class GlyphCycleError(Exception):
    """Base class for every error raised by glyphcycle."""


class DimensionError(GlyphCycleError, ValueError):
    """Operand shapes are incompatible for the requested operation."""

    def __init__(self, message, *shapes):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class ConfigError(GlyphCycleError, ValueError):
    """A configuration value is invalid or inconsistent."""


class ParseError(GlyphCycleError, ValueError):
    """Binary or text input could not be decoded.

    ``offset`` is the byte offset at which decoding failed and ``record`` the
    zero-based record index, when the format has records.
    """

    def __init__(self, message, offset=None, record=None):
        parts = [message]
        if record is not None:
            parts.append(f"record {record}")
        if offset is not None:
            parts.append(f"offset {offset}")
        super().__init__(" @ ".join(parts) if len(parts) > 1 else message)
        self.offset = offset
        self.record = record


class NonFiniteError(GlyphCycleError, FloatingPointError):
    """A NaN or Inf appeared in a named tensor during training."""

    def __init__(self, name, step=None):
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"non-finite values in {name}{where}")
        self.name = name
        self.step = step
