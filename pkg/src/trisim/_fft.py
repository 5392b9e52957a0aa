"""FFT backend shim.

All heavy transforms go through this module so the rest of the code is
backend-agnostic.  PyTorch's CPU FFT is roughly twice as fast as
scipy.fft on large double-precision 3D grids, so it is preferred when
importable; scipy.fft is the fallback.  Both use the same unnormalized
forward / 1/N inverse convention as numpy.

Select explicitly with TRISIM_FFT_BACKEND=torch|scipy.  The thread cap
(TRISIM_THREADS or set_max_threads) applies to whichever backend is
active; results are deterministic for a fixed input either way.
"""

from __future__ import annotations

import os

import numpy as np

_BACKEND = None
_MAX_THREADS = None


def _pick_backend() -> str:
    forced = os.environ.get("TRISIM_FFT_BACKEND", "").strip().lower()
    if forced in ("torch", "scipy"):
        if forced == "torch":
            import torch  # noqa: F401
        return forced
    try:
        import torch  # noqa: F401
        return "torch"
    except ImportError:
        return "scipy"


def backend_name() -> str:
    global _BACKEND
    if _BACKEND is None:
        _BACKEND = _pick_backend()
        _apply_threads()
    return _BACKEND


def set_max_threads(n: int | None) -> None:
    """Cap worker threads used by the FFT backend (None = all cores)."""
    global _MAX_THREADS
    _MAX_THREADS = n if n is None else max(1, int(n))
    if _BACKEND is not None:
        _apply_threads()


def get_max_threads() -> int:
    if _MAX_THREADS is not None:
        return _MAX_THREADS
    env = os.environ.get("TRISIM_THREADS", "").strip()
    if env.isdigit() and int(env) > 0:
        return int(env)
    return os.cpu_count() or 1


def _apply_threads() -> None:
    if _BACKEND == "torch":
        import torch

        torch.set_num_threads(get_max_threads())


def fftn(a: np.ndarray) -> np.ndarray:
    if backend_name() == "torch":
        import torch

        return torch.fft.fftn(torch.from_numpy(np.ascontiguousarray(a))).numpy()
    import scipy.fft as sfft

    return sfft.fftn(a, workers=get_max_threads())


def ifftn(a: np.ndarray) -> np.ndarray:
    if backend_name() == "torch":
        import torch

        return torch.fft.ifftn(torch.from_numpy(np.ascontiguousarray(a))).numpy()
    import scipy.fft as sfft

    return sfft.ifftn(a, workers=get_max_threads())


def fft2(a: np.ndarray) -> np.ndarray:
    if backend_name() == "torch":
        import torch

        return torch.fft.fft2(torch.from_numpy(np.ascontiguousarray(a))).numpy()
    import scipy.fft as sfft

    return sfft.fft2(a, workers=get_max_threads())


def ifft2(a: np.ndarray) -> np.ndarray:
    if backend_name() == "torch":
        import torch

        return torch.fft.ifft2(torch.from_numpy(np.ascontiguousarray(a))).numpy()
    import scipy.fft as sfft

    return sfft.ifft2(a, workers=get_max_threads())
