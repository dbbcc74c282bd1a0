"""
Basic tools for API development: export tracking, argument validation, and the
exception hierarchy shared by all :mod:`topicgap` packages.
"""
from ._alltracker import *
from ._api import *
from ._errors import *
