"""Minimally scrambling operator-algebra decompositions of Hilbert space."""

__version__ = "0.1.0"

from .algebra import AlgebraSpec, distance, factor_bipartition, maximal_abelian, projection  # noqa: E402
from .models import HamiltonianModel, TfimParams, ToyParams, build_tfim  # noqa: E402
from .scrambling import sigma_l_nrc, sigma_s  # noqa: E402
