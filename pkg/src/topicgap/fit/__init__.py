"""
Estimators fitted to data, and guards for methods that need fitted parameters.
"""

from ._fit import *
