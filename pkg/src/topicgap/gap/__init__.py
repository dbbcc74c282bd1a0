"""
The distance between two corpus layers: cosine similarity of their topics over a
shared vocabulary, cumulative similarity, and rankings of poorly connected topics.
"""
from ._align import *
from ._similarity import *
from ._report import *
