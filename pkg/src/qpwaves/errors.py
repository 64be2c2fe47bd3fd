"""Exception types shared across the package."""


class QPWavesError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(QPWavesError):
    """A configuration or input failed semantic validation."""


class RationalDependence(ValidationError):
    """A nonzero lattice index in the truncation box has directional
    frequency below the independence tolerance.

    Attributes
    ----------
    index : tuple of int
        The offending lattice index j.
    value : float
        The directional frequency <j, k> at that index.
    """

    def __init__(self, index, value, tol):
        self.index = tuple(int(i) for i in index)
        self.value = float(value)
        self.tol = float(tol)
        super().__init__(
            "directional frequency %.3e at index %s is below tolerance %.1e"
            % (self.value, self.index, self.tol)
        )


class SurfaceDegenerate(QPWavesError):
    """|1 + W| dropped below the chord-arc threshold somewhere on the grid,
    so the surface parametrization is (numerically) degenerating."""

    def __init__(self, min_chord, eps_chord, t=None):
        self.min_chord = float(min_chord)
        self.eps_chord = float(eps_chord)
        self.t = t
        msg = "min |1+W| = %.3e fell below eps_chord = %.3e" % (
            self.min_chord,
            self.eps_chord,
        )
        if t is not None:
            msg += " at t = %.6f" % t
        super().__init__(msg)


class NonFinite(QPWavesError):
    """A NaN or Inf appeared in evolved coefficients."""

    def __init__(self, where, t=None):
        self.where = where
        self.t = t
        msg = "non-finite values in %s" % (where,)
        if t is not None:
            msg += " at t = %.6f" % t
        super().__init__(msg)


class ParseError(QPWavesError):
    """A configuration file could not be parsed."""


class FormatVersionMismatch(QPWavesError):
    """A snapshot was written by an incompatible format version."""


class CorruptSnapshot(QPWavesError):
    """A snapshot file is unreadable or fails its checksum."""
