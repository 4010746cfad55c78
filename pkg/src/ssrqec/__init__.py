"""Superselection-rule quantum error correction toolkit.

Modules: ``hilbert`` (finite-dimensional state/operator layer), ``klcore``
(Knill-Laflamme and sector checks), ``rotor`` (truncated planar-rotor
charge codes and group averaging), ``qcdcode`` (hadronic repetition code
and rate models), ``scatter`` (relativistic 2->2 cross-sections),
``toriccode`` (Z_N toric code with symbolic qudit Paulis), ``cli``
(experiment runner).
"""

__version__ = "0.1.0"

from . import hilbert, klcore, qcdcode, rotor, scatter, toriccode  # noqa: F401

__all__ = ["hilbert", "klcore", "rotor", "qcdcode", "scatter", "toriccode",
           "cli", "__version__"]
