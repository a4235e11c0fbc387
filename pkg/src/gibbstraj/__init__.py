"""Numerical simulation and verification of single-trajectory quantum Gibbs-sampling estimators.

Submodules: ``linalg``, ``models``, ``channels``, ``gqpe``, ``woft``,
``estimator``, ``diagnostics``, ``verify``, ``examples`` and ``cli``.
"""

__version__ = "0.1.0"
