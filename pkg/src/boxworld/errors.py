"""Exception hierarchy shared across the package."""


class BoxWorldError(Exception):
    """Base class for every error raised by :mod:`boxworld`."""


class ShapeError(BoxWorldError, ValueError):
    """An index set is missing, has extras, or lies outside a signature."""


class SignatureMismatch(BoxWorldError, ValueError):
    """Two objects that must share a signature do not."""


class InvalidStateError(BoxWorldError, ValueError):
    pass


class InvalidMeasurementError(BoxWorldError, ValueError):
    pass


class InvalidTransformationError(BoxWorldError, ValueError):
    pass


class ConditioningError(BoxWorldError, ValueError):
    """Conditioning on an outcome of probability zero."""


class SizeGuardError(BoxWorldError):
    """A desk-scale enumeration would exceed its configured size limit."""


class GreedyBlocked(InvalidMeasurementError):
    """The greedy wiring decomposition found no subtractable basic array.

    For one or two subsystems this only happens when the input is not a
    valid (subnormalised) total measurement array.
    """
