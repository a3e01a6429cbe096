"""Pure NumPy/SciPy implementations of the hot kernels.

This module is the fallback backend selected when the compiled extension
(imrep._kernels._core) is unavailable or when IMREP_KERNELS=python. Both
backends implement the same contracts and are cross-checked in the test
suite.

Conventions:
  - images/activations are (N, C, H, W); conv weights are (O, C, kh, kw)
  - descriptor pooling planes are (B, H, W) with B orientation planes
  - all kernels are deterministic; no hidden random state
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


# ---------------------------------------------------------------------------
# dense descriptor pooling

def _box2(f: np.ndarray, s: int) -> np.ndarray:
    """Correlate twice with a length-s box along the last axis.

    Output index a corresponds to a tent window of half-width s whose
    centre sits at a + (s - 1):  out[a] = sum_t f[a+t'] * (s - |t' - (s-1)|).
    """
    c = np.cumsum(f, axis=-1, dtype=np.float64)
    zero = np.zeros(c.shape[:-1] + (1,), dtype=np.float64)
    c = np.concatenate([zero, c], axis=-1)
    b = c[..., s:] - c[..., :-s]
    c2 = np.cumsum(b, axis=-1, dtype=np.float64)
    c2 = np.concatenate([zero, c2], axis=-1)
    return c2[..., s:] - c2[..., :-s]


def sift_pool_flat(
    planes: np.ndarray, ax: np.ndarray, ay: np.ndarray, bin_size: int
) -> np.ndarray:
    """Pool orientation planes into 4x4 bilinear spatial bins (flat window).

    ``planes`` is (B, H, W); ``ax``/``ay`` are window anchors (top-left of
    the pooling window, which spans 5*bin_size - 1 pixels). Bin centres sit
    at anchor + (bin_size - 1) + b * bin_size, and each pixel is weighted by
    the product of per-axis tents max(0, 1 - |dist|/bin_size).

    Returns (S, 16 * B) with layout index ((by * 4 + bx) * B + o).
    """
    nb, h, w = planes.shape
    s = int(bin_size)
    ax = np.asarray(ax, dtype=np.int64)
    ay = np.asarray(ay, dtype=np.int64)
    out = np.empty((ax.shape[0], 16 * nb), dtype=np.float64)
    if ax.shape[0] == 0:
        return out

    # tent response maps, normalised so weights peak at 1
    rx = _box2(np.ascontiguousarray(planes), s) / s  # (B, H, Wv)
    r = _box2(np.ascontiguousarray(np.swapaxes(rx, 1, 2)), s) / s
    r = np.swapaxes(r, 1, 2)  # (B, Hv, Wv); r[:, y0, x0] = centre (y0+s-1, x0+s-1)

    for by in range(4):
        iy = ay + by * s
        for bx in range(4):
            ix = ax + bx * s
            block = r[:, iy, ix]  # (B, S)
            out[:, (by * 4 + bx) * nb : (by * 4 + bx + 1) * nb] = block.T
    return out


def sift_pool_gaussian(
    planes: np.ndarray,
    ax: np.ndarray,
    ay: np.ndarray,
    bin_size: int,
    sigma: float,
) -> np.ndarray:
    """Like sift_pool_flat with an extra Gaussian window over the support.

    The Gaussian is centred on the pooling window (length L = 5*bin_size - 1)
    with the given sigma and factorises across axes, so each spatial bin is a
    separable correlation with a (tent * gaussian) kernel.
    """
    nb, h, w = planes.shape
    s = int(bin_size)
    length = 5 * s - 1
    ax = np.asarray(ax, dtype=np.int64)
    ay = np.asarray(ay, dtype=np.int64)
    out = np.empty((ax.shape[0], 16 * nb), dtype=np.float64)
    if ax.shape[0] == 0:
        return out

    mid = (length - 1) / 2.0
    t = np.arange(length, dtype=np.float64)
    gauss = np.exp(-0.5 * ((t - mid) / sigma) ** 2)
    kernels = []
    for b in range(4):
        centre = (s - 1) + b * s
        tent = np.maximum(0.0, 1.0 - np.abs(t - centre) / s)
        kernels.append(tent * gauss)

    xwin = sliding_window_view(planes, length, axis=2)  # (B, H, Wv, L)
    cols = [np.tensordot(xwin, k, axes=([3], [0])) for k in kernels]
    ywins = [sliding_window_view(c, length, axis=1) for c in cols]  # (B,Hv,Wv,L)

    for by in range(4):
        ky = kernels[by]
        for bx in range(4):
            full = np.tensordot(ywins[bx], ky, axes=([3], [0]))  # (B, Hv, Wv)
            block = full[:, ay, ax]
            out[:, (by * 4 + bx) * nb : (by * 4 + bx + 1) * nb] = block.T
    return out


# ---------------------------------------------------------------------------
# Gaussian mixture

def gmm_log_densities(
    x: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    log_weights: np.ndarray,
) -> np.ndarray:
    """Per-point, per-component log(pi_k * N(x; mu_k, diag sigma2_k)).

    Returns (N, K) float64.
    """
    d = x.shape[1]
    inv = 1.0 / variances  # (K, D)
    const = (
        log_weights
        - 0.5 * d * np.log(2.0 * np.pi)
        - 0.5 * np.sum(np.log(variances), axis=1)
    )
    quad = (
        (x * x) @ (0.5 * inv).T
        - x @ (means * inv).T
        + 0.5 * np.sum(means * means * inv, axis=1)
    )
    return const[None, :] - quad


def weighted_moments(x: np.ndarray, q: np.ndarray):
    """Zeroth/first/second moments of x under per-point weights q.

    x is (N, D), q is (N, K); returns (s0 (K,), s1 (K, D), s2 (K, D)) with
    s0_k = sum_i q_ik, s1_k = sum_i q_ik x_i, s2_k = sum_i q_ik x_i^2.
    """
    s0 = q.sum(axis=0)
    s1 = q.T @ x
    s2 = q.T @ (x * x)
    return s0, s1, s2


# ---------------------------------------------------------------------------
# convolution / pooling

def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int):
    n, c, h, w = x.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    if pad > 0:
        xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
        xp[:, :, pad : pad + h, pad : pad + w] = x
    else:
        xp = x
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, 0 : (ho - 1) * stride + 1 : stride, 0 : (wo - 1) * stride + 1 : stride]
    # (N, C, Ho, Wo, kh, kw) -> (N, C*kh*kw, Ho*Wo)
    cols = win.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * kh * kw, ho * wo)
    return np.ascontiguousarray(cols), ho, wo


def conv2d_forward(
    x: np.ndarray, w: np.ndarray, b: np.ndarray | None, stride: int, pad: int
) -> np.ndarray:
    n = x.shape[0]
    o, c, kh, kw = w.shape
    cols, ho, wo = _im2col(x, kh, kw, stride, pad)
    y = np.matmul(w.reshape(o, -1), cols)  # (N, O, Ho*Wo)
    y = y.reshape(n, o, ho, wo)
    if b is not None:
        y += b[None, :, None, None]
    return y


def conv2d_backward(
    x: np.ndarray, w: np.ndarray, dy: np.ndarray, stride: int, pad: int
):
    n, c, h, ww = x.shape
    o, _, kh, kw = w.shape
    _, _, ho, wo = dy.shape
    cols, _, _ = _im2col(x, kh, kw, stride, pad)
    dy2 = dy.reshape(n, o, ho * wo)

    dw = np.matmul(
        dy2.transpose(1, 0, 2).reshape(o, -1),
        cols.transpose(0, 2, 1).reshape(n * ho * wo, -1),
    ).reshape(o, c, kh, kw)
    db = dy.sum(axis=(0, 2, 3))

    dcols = np.matmul(w.reshape(o, -1).T, dy2)  # (N, C*kh*kw, Ho*Wo)
    dcols = dcols.reshape(n, c, kh, kw, ho, wo)
    dxp = np.zeros((n, c, h + 2 * pad, ww + 2 * pad), dtype=x.dtype)
    for ki in range(kh):
        for kj in range(kw):
            dxp[
                :, :, ki : ki + (ho - 1) * stride + 1 : stride,
                kj : kj + (wo - 1) * stride + 1 : stride,
            ] += dcols[:, :, ki, kj]
    dx = dxp[:, :, pad : pad + h, pad : pad + ww]
    return np.ascontiguousarray(dx), dw, db


def maxpool_forward(x: np.ndarray, window: int, stride: int):
    """Max pool; returns (y, idx) where idx is the row-major in-window offset
    of the maximum (first occurrence on ties)."""
    n, c, h, w = x.shape
    z = window
    ho = (h - z) // stride + 1
    wo = (w - z) // stride + 1
    win = sliding_window_view(x, (z, z), axis=(2, 3))
    win = win[:, :, 0 : (ho - 1) * stride + 1 : stride, 0 : (wo - 1) * stride + 1 : stride]
    flat = win.reshape(n, c, ho, wo, z * z)
    idx = np.argmax(flat, axis=4)
    y = np.take_along_axis(flat, idx[..., None], axis=4)[..., 0]
    return np.ascontiguousarray(y), idx.astype(np.int64)


def maxpool_backward(
    dy: np.ndarray, idx: np.ndarray, in_h: int, in_w: int, window: int, stride: int
) -> np.ndarray:
    n, c, ho, wo = dy.shape
    z = window
    dx = np.zeros((n, c, in_h, in_w), dtype=dy.dtype)
    for t in range(z * z):
        mask = idx == t
        if not mask.any():
            continue
        ki, kj = divmod(t, z)
        view = dx[
            :, :, ki : ki + (ho - 1) * stride + 1 : stride,
            kj : kj + (wo - 1) * stride + 1 : stride,
        ]
        view += np.where(mask, dy, 0)
    return dx


# ---------------------------------------------------------------------------
# linear SVM dual coordinate descent

def svm_cd_epoch(
    xb: np.ndarray,
    y: np.ndarray,
    qdiag: np.ndarray,
    alpha: np.ndarray,
    w: np.ndarray,
    c: float,
    order: np.ndarray,
) -> float:
    """One pass of dual coordinate descent for the L1-hinge linear SVM.

    Updates ``alpha`` and ``w`` in place, visiting rows of ``xb`` in the
    given order. Returns the largest projected-gradient magnitude seen,
    which drives the caller's convergence test.
    """
    maxpg = 0.0
    for i in order:
        xi = xb[i]
        yi = y[i]
        g = yi * float(w @ xi) - 1.0
        a = alpha[i]
        if a <= 0.0:
            pg = min(g, 0.0)
        elif a >= c:
            pg = max(g, 0.0)
        else:
            pg = g
        apg = abs(pg)
        if apg > maxpg:
            maxpg = apg
        if apg > 1e-12:
            anew = min(max(a - g / qdiag[i], 0.0), c)
            if anew != a:
                w += (anew - a) * yi * xi
                alpha[i] = anew
    return maxpg
