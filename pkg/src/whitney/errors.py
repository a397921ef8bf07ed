class WhitneyError(Exception):
    """Base class for library errors."""


class GenericityError(WhitneyError):
    """Input violates the genericity assumptions (tangency, triple point, ...).

    ``kind`` is one of the violation kinds reported by
    :func:`whitney.curve.genericity_check`.
    """

    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


class ImmersionError(WhitneyError):
    """A sampled curve has a zero-speed point or degenerate segment."""


class FlowError(WhitneyError):
    """A trajectory left the admissible box or met a singular field value."""


class SceneError(WhitneyError):
    """Malformed scene description."""
