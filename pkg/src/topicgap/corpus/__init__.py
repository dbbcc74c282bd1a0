"""
Ingestion of bibliographic and project records, and a boolean keyword query
language to filter them.
"""
from ._document import *
from ._ingest import *
from ._query import *
