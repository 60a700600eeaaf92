"""facalc: exact symbolic calculator for filtered tensor coalgebra
structures over Novikov-type coefficient rings.

Everything is computed in exact rational arithmetic; completed objects are
handled through truncation windows that report whether discarded tails were
provably negligible (SOUND) or not (LOSSY).
"""

__version__ = "0.1.0"
