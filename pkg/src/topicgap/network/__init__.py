"""
Topic correlation networks, their statistics, and topic prevalence by covariate
level.
"""
from ._graph import *
from ._prevalence import *
