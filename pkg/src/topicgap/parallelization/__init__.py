"""
Parallelization support based on the :mod:`joblib` package.

Results are always returned in job order, so aggregating them sequentially yields
the same floating point results regardless of the number of workers.
"""

from ._parallelization import *
