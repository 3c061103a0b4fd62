"""Select the compiled kernels when importable, else the pure-Python twin.

Set ``CONEKERNEL_BACKEND=python`` to force the fallback (``compiled`` to
require the extension).
"""

import importlib
import os

_CHOICE = os.environ.get("CONEKERNEL_BACKEND", "auto").lower()


def load(name: str):
    """Import a backend by name: ``"compiled"`` or ``"python"``."""
    if name == "compiled":
        return importlib.import_module("conekernel._ckernels")
    if name == "python":
        return importlib.import_module("conekernel._pykernels")
    raise ValueError(f"unknown backend {name!r}")


def available() -> list:
    names = []
    for name in ("compiled", "python"):
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


if _CHOICE == "auto":
    try:
        kernels = load("compiled")
    except ImportError:
        kernels = load("python")
else:
    kernels = load(_CHOICE)

NAME = kernels.NAME
