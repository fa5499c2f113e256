"""Exception types raised across the package."""


class FractalTopsError(Exception):
    """Base class for all package errors."""


class SingularMap(FractalTopsError, ValueError):
    pass


class BadSymbol(FractalTopsError, ValueError):
    pass


class NoUniqueFixedPoint(FractalTopsError, ValueError):
    pass


class DepthTooLarge(FractalTopsError, ValueError):
    pass


class NotOneDimensional(FractalTopsError, ValueError):
    pass


class EscapedAttractor(FractalTopsError, RuntimeError):
    pass


class ClassificationFailure(FractalTopsError, RuntimeError):
    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class OrbitExplosion(FractalTopsError, RuntimeError):
    pass


class DegenerateOrbit(FractalTopsError, ValueError):
    pass


class NotCommonRatio(FractalTopsError, ValueError):
    pass


class NotTranslationFamily(FractalTopsError, ValueError):
    pass


class ViewportMismatch(FractalTopsError, ValueError):
    pass
