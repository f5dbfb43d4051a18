"""Spectral analysis of retarded time-delay systems.

Submodules
----------

``core``
    Quasipolynomial representation, evaluation, exact differentiation.
``rootfinder``
    Argument-principle root location, multiplicities, unstable-root counts.
``crossing``
    Single-delay crossing frequencies, critical delays, hyperbolicity.
``fsc``
    Frequency-sweeping curves and piecewise-constant unstable-root profiles.
``puiseux``
    Newton-diagram / Puiseux analysis of multiple characteristic roots.
``mid``
    Multiplicity-induced-dominancy partial pole placement.
``gallery``
    Ready-made benchmark systems used in tests and data export.
"""

from .core import (
    Commensurate,
    Fixed,
    Quasipolynomial,
    RealPolynomial,
    auxiliary_polynomial,
    evaluate,
    mixed_derivative,
    polya_szego_degree,
    shifted_evaluator,
)
from .rootfinder import (
    ComplexBox,
    RootCluster,
    count_unstable,
    multiplicity_at,
    rightmost_roots,
    roots_in_box,
    winding_count,
)

__version__ = "0.1.0"
