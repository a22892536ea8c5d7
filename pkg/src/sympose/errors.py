"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, DataError and
subclasses exit 2, NumericalError and subclasses exit 3.
"""


class SymposeError(Exception):
    pass


class DataError(SymposeError):
    """Malformed or inconsistent input data (files, descriptors, formats)."""


class MeshError(DataError):
    """Unusable mesh: parse failure, bad indices, degenerate surface."""


class SymmetryError(DataError):
    """Invalid symmetry specification, e.g. a rotation list that is not a group."""


class NumericalError(SymposeError):
    """A numerical procedure failed (divergence, ambiguous mean, ...)."""


class AmbiguousMeanError(NumericalError):
    """Pose averaging has no well-defined projection back to a pose."""


class SolverError(NumericalError):
    """PnP solve failed: underdetermined, degenerate or diverged."""
