"""
Core implementation of :class:`.AllTracker`.
"""

import logging
import re
from typing import Any, Dict, List, Optional

log = logging.getLogger(__name__)

__all__ = ["AllTracker", "public_module_prefix"]


class AllTracker:
    """
    Track global, public items defined in a module and validate that all of them
    have been included in the ``__all__`` variable.

    Items are tracked if their name does not start with an underscore, and if they
    are defined after the tracker has been created.

    All :mod:`topicgap` packages define their items in private submodules, export
    them using ``__all__``, and import them into the public package one level up.
    Creating a tracker at the top of the private module and calling
    :meth:`.validate` at the bottom ensures the public namespace stays in sync with
    what the module defines.

    Exporting constants, or re-exporting definitions imported from another module,
    is rejected unless explicitly allowed.
    """

    #: Full name of the public module that exports the tracked items.
    public_module: str

    #: If ``True``, allow exporting global constants in ``__all__``.
    allow_global_constants: bool

    def __init__(
        self,
        globals_: Dict[str, Any],
        *,
        public_module: Optional[str] = None,
        allow_global_constants: bool = False,
    ) -> None:
        """
        :param globals_: the global namespace of the tracked module, as returned by
            :func:`globals`
        :param public_module: full name of the public module exporting the tracked
            items; inferred from the module name if not stated
        :param allow_global_constants: if ``True``, allow exporting global constants
            (default: ``False``)
        """
        self._globals = globals_
        self._imported = set(globals_.keys())

        try:
            self._module = globals_["__name__"]
        except KeyError:
            raise ValueError("arg globals_ does not define module name in __name__")

        self.public_module = public_module or public_module_prefix(self._module)
        self.allow_global_constants = allow_global_constants

    def validate(self) -> None:
        """
        Validate that all public items defined since the creation of this tracker
        are listed in ``__all__``, and that all of them are eligible for export.

        :raise AssertionError: ``__all__`` is incomplete or lists ineligible items
        """
        expected = self.get_tracked()
        globals_ = self._globals

        if set(globals_.get("__all__", [])) != set(expected):
            raise AssertionError(
                "missing or unexpected all declaration, "
                f"expected:\n__all__ = {expected}"
            )

        for name in expected:
            obj = globals_[name]
            obj_module = getattr(obj, "__module__", None)

            if obj_module is None:
                if not self.allow_global_constants:
                    raise AssertionError(
                        f"exporting a global constant is not permitted: {obj!r}"
                    )
            elif obj_module != self._module:
                raise AssertionError(
                    f"{name} is exported by module {self._module} "
                    f"but defined in module {obj_module}"
                )

            try:
                obj.__publicmodule__ = self.public_module
            except AttributeError:
                # objects without a __dict__ do not permit setting attributes
                pass

    def get_tracked(self) -> List[str]:
        """
        List the names of all tracked public items.

        :return: the names, sorted alphabetically
        """
        return sorted(
            name
            for name in self._globals
            if not (name.startswith("_") or name in self._imported)
        )


__RE_PUBLIC_MODULE = re.compile(r"((?:[a-zA-Z]\w+)(?:\.\w+)*?)(?:\._\w*(?:\.\w+)*)?")


def public_module_prefix(module_name: str) -> str:
    """
    Get the public prefix of the given module name, i.e., all path components up to
    and excluding the first component starting with an underscore.

    For example, the public prefix of ``topicgap.corpus._query`` is
    ``topicgap.corpus``.

    :param module_name: the full module name
    :return: the public prefix
    :raise ValueError: the module name has no public prefix
    """
    match = __RE_PUBLIC_MODULE.fullmatch(module_name)
    if not match:
        raise ValueError(f"cannot infer public module path from module {module_name}")
    return match[1]
