"""Spectral experiments for uniform random d-regular directed graphs.

Modules
-------
digraph         sampling, balls, tree-likeness, radius parameters
switching       local resampling of boundary edges and its indicator chi
selfconsistent  the cubic for m_inf and derived tree quantities
treegreen       finite oriented trees, their extensions and exact Green's functions
resolvent       Hermitization, Green's functions, Q parameters, singular values
girko           empirical spectra and Girko's identity
cli             command-line experiments
"""
__version__ = "0.1.0"

from .digraph import Digraph, sample_simple, sample_configuration, ball, radius_parameters  # noqa: E402,F401
from .selfconsistent import solve_m_infty, m_infty, mT_d  # noqa: E402,F401
from .errors import DigraphLawError, ValidationError, NumericalError  # noqa: E402,F401
