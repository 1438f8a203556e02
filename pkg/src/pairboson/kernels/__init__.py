"""Integrand kernel backend selection.

Prefers the compiled extension when it was built; otherwise falls back to the
pure-numpy implementation with identical semantics.
"""

try:
    from ._fastkern import eval_rows  # noqa: F401
    BACKEND = "cython"
except ImportError:
    from .pure import eval_rows  # noqa: F401
    BACKEND = "numpy"

from .pure import NROWS  # noqa: F401
