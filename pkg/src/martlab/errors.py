"""Exception hierarchy shared by all martlab modules."""


class MartlabError(Exception):
    """Base class for every error raised by this package."""


class ConstructionError(MartlabError, ValueError):
    """An object violates one of its structural invariants."""


class PreconditionError(MartlabError, ValueError):
    """An operation was called on inputs that fail its stated precondition."""


class SelfCheckError(MartlabError, RuntimeError):
    """A mandatory internal post-condition failed; indicates a defect, not bad input."""


class ModelFormatError(ConstructionError):
    """A model file failed to parse or validate; carries a field-path diagnostic."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
