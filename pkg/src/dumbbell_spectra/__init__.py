"""Neumann spectra of planar dumbbells.

Finite-element eigenpairs of two mirror-image bulks joined by a thin neck,
checked against one-dimensional Sturm-Liouville predictions (branch slopes,
ordering and indices) and against analytic rectangle modes (nodal counts,
Courant sharpness).
"""

__version__ = "0.1.0"

from .errors import DumbbellError  # noqa: E402

__all__ = ["DumbbellError", "__version__"]
