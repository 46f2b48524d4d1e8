"""Depth-supervision objectives on disparity maps.

Disparity is inverse depth; infinite-depth pixels must be masked out before
these functions see the map. The combined objective is a scale-invariant
log loss plus a multi-scale L1 gradient-matching regularizer evaluated on
median/deviation-normalized disparities.
"""

from __future__ import annotations

import numpy as np

_MAD_FLOOR = 1e-12


def _as_map(d, name: str = "disparity") -> np.ndarray:
    arr = np.asarray(d, np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} map must be a non-empty 2-D array")
    return arr


def _check_positive(arr: np.ndarray, name: str) -> None:
    bad = ~np.isfinite(arr) | (arr <= 0)
    if bad.any():
        yy, xx = np.nonzero(bad)
        raise ValueError(
            f"{name} has non-positive or non-finite value {arr[yy[0], xx[0]]!r} "
            f"at pixel (x={xx[0]}, y={yy[0]})"
        )


def normalize_disparity(d) -> np.ndarray:
    """Median-subtract and scale by the mean absolute deviation from the median.

    Constant maps (deviation below 1e-12) normalize to all-zero rather
    than dividing by ~0.
    """
    arr = _as_map(d)
    med = float(np.median(arr))
    dev = arr - med
    mad = float(np.mean(np.abs(dev)))
    if mad < _MAD_FLOOR:
        return dev.copy()
    return dev / mad


def silog_loss(d, d_star) -> float:
    """Scale-invariant log loss: mean(x^2) - mean(x)^2 / 2, x = log(d/d*)."""
    pred = _as_map(d, "prediction")
    target = _as_map(d_star, "target")
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    _check_positive(pred, "prediction")
    _check_positive(target, "target")
    x = np.log(pred / target)
    n = x.size
    s1 = float(np.sum(x))
    s2 = float(np.sum(x * x))
    return s2 / n - (s1 * s1) / (2.0 * n * n)


def _forward_diffs(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return m[:, 1:] - m[:, :-1], m[1:, :] - m[:-1, :]


def gradient_regularizer(d_n, d_star_n, num_scales: int = 4) -> float:
    """Multi-scale L1 gradient matching on normalized disparities.

    Scale s uses stride-2**s subsampling (no smoothing) weighted by 4**s;
    forward differences drop the last row/column; scales smaller than 2x2
    contribute nothing. Normalization is by the full-resolution pixel count.
    """
    a = _as_map(d_n, "prediction")
    b = _as_map(d_star_n, "target")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    n_full = a.size
    total = 0.0
    for s in range(num_scales):
        stride = 1 << s
        a_s = a[::stride, ::stride]
        b_s = b[::stride, ::stride]
        if a_s.shape[0] < 2 or a_s.shape[1] < 2:
            continue
        gax, gay = _forward_diffs(a_s)
        gbx, gby = _forward_diffs(b_s)
        term = float(np.sum(np.abs(gax - gbx)) + np.sum(np.abs(gay - gby)))
        total += (4.0 ** s) * term
    return total / n_full


def depth_objective(d, d_star, lam: float = 1.0, num_scales: int = 4) -> float:
    """silog(d, d*) + lam * gradient regularizer on normalized maps."""
    loss = silog_loss(d, d_star)
    if lam != 0.0:
        loss += lam * gradient_regularizer(
            normalize_disparity(d), normalize_disparity(d_star), num_scales
        )
    return loss


def depth_objective_gradient(d, d_star, lam: float = 1.0, num_scales: int = 4) -> np.ndarray:
    """Analytic gradient of depth_objective with respect to each pixel of d.

    Valid away from median ties and zero gradient-difference kinks (the
    objective is differentiable almost everywhere). Used to cross-check
    finite differences.
    """
    pred = _as_map(d, "prediction")
    target = _as_map(d_star, "target")
    _check_positive(pred, "prediction")
    _check_positive(target, "target")
    n = pred.size

    # silog part: dL/dx_i = 2 x_i / n - sum(x) / n^2, x_i = log(d_i / d*_i)
    x = np.log(pred / target)
    grad = (2.0 * x / n - np.sum(x) / (n * n)) / pred

    if lam == 0.0:
        return grad

    # regularizer through the normalization p = (d - med) / mad
    p = normalize_disparity(pred)
    q = normalize_disparity(target)
    g_p = np.zeros_like(p)
    for s in range(num_scales):
        stride = 1 << s
        p_s = p[::stride, ::stride]
        q_s = q[::stride, ::stride]
        if p_s.shape[0] < 2 or p_s.shape[1] < 2:
            continue
        w = 4.0 ** s
        sx = np.sign((p_s[:, 1:] - p_s[:, :-1]) - (q_s[:, 1:] - q_s[:, :-1]))
        sy = np.sign((p_s[1:, :] - p_s[:-1, :]) - (q_s[1:, :] - q_s[:-1, :]))
        g_s = np.zeros_like(p_s)
        g_s[:, 1:] += sx
        g_s[:, :-1] -= sx
        g_s[1:, :] += sy
        g_s[:-1, :] -= sy
        g_p[::stride, ::stride] += w * g_s
    g_p /= n

    # chain rule through median and mean-absolute-deviation normalization
    med = float(np.median(pred))
    dev = pred - med
    mad = float(np.mean(np.abs(dev)))
    if mad < _MAD_FLOOR:
        mad = 1.0
        dmad_dd = np.zeros_like(pred)
        dmed_dd = np.zeros_like(pred)
    else:
        flat = np.argsort(pred, axis=None)
        dmed_dd = np.zeros(n)
        if n % 2 == 1:
            dmed_dd[flat[n // 2]] = 1.0
        else:
            dmed_dd[flat[n // 2 - 1]] = 0.5
            dmed_dd[flat[n // 2]] = 0.5
        dmed_dd = dmed_dd.reshape(pred.shape)
        sgn = np.sign(dev)
        # d(mad)/dd_k = (sign(d_k - med) - dmed_k * mean(sign)) / n
        dmad_dd = (sgn - dmed_dd * np.sum(sgn)) / n

    sum_g = float(np.sum(g_p))
    a_coef = float(np.sum(g_p * dev)) / (mad * mad)
    grad += lam * (g_p / mad - dmed_dd * (sum_g / mad) - dmad_dd * a_coef)
    return grad
