"""Exception types shared across checker modules."""


class IsmcError(Exception):
    """Base class for checker errors."""


class NameResolutionError(IsmcError):
    """A formula references an undeclared atom, agent, or group member."""


class FragmentError(IsmcError):
    """A formula falls outside the fragment a backend supports."""


class ExplosionError(IsmcError):
    """State-space construction exceeded the configured cap."""

    def __init__(self, cap: int):
        super().__init__(f"reachable state space exceeds cap of {cap} states")
        self.cap = cap


class EncodingError(IsmcError):
    """Boolean state encoding could not be constructed."""
