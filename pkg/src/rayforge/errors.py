"""Exception hierarchy shared by all rayforge modules."""


class RayforgeError(Exception):
    """Base class for every error raised by this package."""


class MapOverflow(RayforgeError, OverflowError):
    """Evaluation left the double-precision range (callers treat it as escape)."""


class UnsupportedFamily(RayforgeError):
    pass


class NotACycle(RayforgeError):
    pass


class RadiusTooSmall(RayforgeError):
    pass


class AddressSyntaxError(RayforgeError, ValueError):
    pass


class InvalidSymbol(RayforgeError, ValueError):
    pass


class DivergentHead(RayforgeError):
    pass


class ContinuationAmbiguous(RayforgeError):
    """Two candidate preimages were indistinguishable even after bisection."""


class NotAFixedPoint(RayforgeError):
    pass


class OnBoundary(RayforgeError):
    pass


class NotInPreimage(RayforgeError):
    pass


class NotRepelling(RayforgeError):
    pass


class OmittedValue(RayforgeError):
    pass


class NotPostsingularlyFinite(RayforgeError):
    pass


class NoAuxiliaryFixedPoint(RayforgeError):
    pass


class DegenerateInput(RayforgeError):
    pass
