"""Exact verification kernel for Frobenius-type dynamical R-matrices.

Modules, roughly bottom-up: :mod:`coeffield` (exact rational functions),
:mod:`tensoralg` (matrices on tensor powers), :mod:`opalgebra` (shift and
derivation operators), :mod:`models` (the R-matrices and L-operators),
:mod:`poisson` (classical brackets), :mod:`identities` (the check catalog),
:mod:`numerics` (floating-point checks) and :mod:`cli`.
"""
from __future__ import annotations

__version__ = "0.1.0"
