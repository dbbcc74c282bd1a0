"""
Hashing utilities.
"""

import hashlib
import json
import logging
from typing import Any

from ._alltracker import AllTracker

log = logging.getLogger(__name__)

__all__ = ["stable_hash"]

__tracker = AllTracker(globals())


def stable_hash(obj: Any) -> str:
    """
    Compute a SHA-256 hex digest of the canonical JSON representation of an object.

    Keys are sorted and no whitespace is emitted, so equal objects always produce
    equal hashes across runs and platforms.

    :param obj: a JSON-serializable object
    :return: the hex digest
    """
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


__tracker.validate()
