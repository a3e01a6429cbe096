"""Hot-kernel backend selection.

The compiled Cython extension (_core) is preferred when importable; the
NumPy implementation (pyimpl) is the fallback. Set IMREP_KERNELS=python to
force the fallback or IMREP_KERNELS=compiled to fail loudly when the
extension is missing.
"""

import os

_forced = os.environ.get("IMREP_KERNELS", "").strip().lower()

if _forced in ("python", "py"):
    from imrep._kernels import pyimpl as _backend

    BACKEND = "python"
else:
    try:
        from imrep._kernels import _core as _backend  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        from imrep._kernels import pyimpl as _backend

        BACKEND = "python"

sift_pool_flat = _backend.sift_pool_flat
sift_pool_gaussian = _backend.sift_pool_gaussian
gmm_log_densities = _backend.gmm_log_densities
weighted_moments = _backend.weighted_moments
conv2d_forward = _backend.conv2d_forward
conv2d_backward = _backend.conv2d_backward
maxpool_forward = _backend.maxpool_forward
maxpool_backward = _backend.maxpool_backward
svm_cd_epoch = _backend.svm_cd_epoch

__all__ = [
    "BACKEND",
    "sift_pool_flat",
    "sift_pool_gaussian",
    "gmm_log_densities",
    "weighted_moments",
    "conv2d_forward",
    "conv2d_backward",
    "maxpool_forward",
    "maxpool_backward",
    "svm_cd_epoch",
]
