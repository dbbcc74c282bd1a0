"""
A structural topic model: topics as distributions over words, and per-document topic
proportions drawn from a logistic-normal prior whose mean is a linear function of
document covariates.

Models are fitted by variational EM, with a Newton-optimized mode and a Laplace
approximation of each document's posterior.
"""
from ._options import *
from ._model import *
from ._estep import *
from ._mstep import *
from ._init import *
from ._fit import *
from ._diagnostics import *
from ._simulation import *
