"""Pick the compiled kernel core if it was built, else the numpy fallback.

Set ``MIDA_BACKEND=python`` to force the fallback.
"""
import os

from . import _fallback

NAME = "python"
impl = _fallback

if os.environ.get("MIDA_BACKEND", "").lower() != "python":
    try:
        from . import _core
    except ImportError:
        pass
    else:
        impl = _core
        NAME = "cython"
