"""Random PT-symmetric perturbations of non-self-adjoint operators on the circle
and numerical checks of their Weyl asymptotics."""

__version__ = "0.1.0"

from .symbols import OperatorSpec, QuadratureGrid, TrigPoly  # noqa: E402
from .discretize import FourierBasis  # noqa: E402
from .weylgeom import Disc, Rect, Sector  # noqa: E402

__all__ = ["OperatorSpec", "QuadratureGrid", "TrigPoly", "FourierBasis", "Disc", "Rect", "Sector", "__version__"]
