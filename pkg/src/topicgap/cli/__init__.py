"""
The ``topicgap`` command line interface: a staged, reproducible pipeline driven by
one JSON configuration file.
"""
from ._config import *
from ._pipeline import *
from ._report import *
from ._main import *
