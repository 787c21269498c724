"""Kernel backend selection: compiled extension if available, NumPy fallback otherwise."""

from . import _pykernels

try:
    from . import _cykernels as _impl
except ImportError:  # extension not built; fall back
    _impl = _pykernels

BACKEND = _impl.BACKEND
TOPK_PAD = _impl.TOPK_PAD

gray_min = _impl.gray_min
gray_topk = _impl.gray_topk
sa_run = _impl.sa_run
splitmix64 = _impl.splitmix64

__all__ = ["BACKEND", "TOPK_PAD", "gray_min", "gray_topk", "sa_run", "splitmix64"]
