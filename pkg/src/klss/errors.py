"""Exception types shared across the package."""


class KlssError(Exception):
    pass


class InvalidArgument(KlssError, ValueError):
    pass


class InfeasibleRate(KlssError):
    """No energy bound reaches the requested number of shaping bits."""


class ResourceLimit(KlssError, MemoryError):
    def __init__(self, message, state_count):
        super().__init__(message)
        self.state_count = state_count


class ConfigurationError(KlssError, ValueError):
    pass
