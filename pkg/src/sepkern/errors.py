"""Exception types shared across the package."""


class NonIntegrable(ValueError):
    """A product or power is not integrable over the requested support.

    Raised instead of returning ``inf``/``nan`` so callers know they must
    restrict the support (or drop an offending term) before retrying.
    """


class SupportMismatch(ValueError):
    """Two operators were expected to integrate over the same support."""


class InadmissibleParams(ValueError):
    """Family parameters fall outside the admissible parameter set."""


class MembershipError(ValueError):
    """Kernel factors are not in the Lebesgue spaces an operator requires."""


class ConsistencyError(RuntimeError):
    """Two independent routes to the same verdict disagreed."""
