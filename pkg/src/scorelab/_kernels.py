"""Per-sample kernels on uniform grids.

Every kernel has a pure-numpy implementation and a numba ``@njit`` twin.
The numba path is used when numba imports cleanly, unless the environment
variable ``SCORELAB_NUMBA`` is set to ``0``/``false``/``no``.  Both paths
take identical arguments and agree to rounding.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None


def _numba_requested():
    flag = os.environ.get("SCORELAB_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _cell_index_np(lo, dx, n, x):
    k = np.floor((x - lo) / dx).astype(np.int64)
    np.clip(k, 0, n - 2, out=k)
    return k


def interp_uniform_np(values, lo, dx, x):
    """Linear interpolation of grid ``values`` at points ``x`` (1-d array)."""
    n = values.shape[0]
    k = _cell_index_np(lo, dx, n, x)
    t = (x - (lo + k * dx)) / dx
    return values[k] + t * (values[k + 1] - values[k])


def crps_split_np(below, above, cdf, lo, dx, x):
    """CRPS at each outcome in ``x``.

    ``below[i]`` holds the trapezoid integral of F**2 over [x_0, x_i] and
    ``above[i]`` that of (F-1)**2 over [x_i, x_{n-1}].  The cell holding the
    outcome is split at the outcome with F linearly interpolated.
    """
    n = cdf.shape[0]
    k = _cell_index_np(lo, dx, n, x)
    s = x - (lo + k * dx)
    fk = cdf[k]
    fk1 = cdf[k + 1]
    fx = fk + (s / dx) * (fk1 - fk)
    left = below[k] + 0.5 * s * (fk * fk + fx * fx)
    right = 0.5 * (dx - s) * ((fx - 1.0) ** 2 + (fk1 - 1.0) ** 2) + above[k + 1]
    return left + right


def inverse_cdf_np(cdf, lo, dx, u):
    """Invert the piecewise-linear CDF at uniform variates ``u`` in [0, 1)."""
    n = cdf.shape[0]
    k = np.searchsorted(cdf, u, side="right") - 1
    np.clip(k, 0, n - 2, out=k)
    width = cdf[k + 1] - cdf[k]
    safe = np.where(width > 0.0, width, 1.0)
    t = np.where(width > 0.0, (u - cdf[k]) / safe, 0.0)
    return lo + (k + np.clip(t, 0.0, 1.0)) * dx


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True)
    def _cell_index_nb(lo, dx, n, xi):
        k = int(np.floor((xi - lo) / dx))
        if k < 0:
            k = 0
        elif k > n - 2:
            k = n - 2
        return k

    @numba.njit(cache=True)
    def interp_uniform_nb(values, lo, dx, x):
        n = values.shape[0]
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            k = _cell_index_nb(lo, dx, n, x[i])
            t = (x[i] - (lo + k * dx)) / dx
            out[i] = values[k] + t * (values[k + 1] - values[k])
        return out

    @numba.njit(cache=True)
    def crps_split_nb(below, above, cdf, lo, dx, x):
        n = cdf.shape[0]
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            k = _cell_index_nb(lo, dx, n, x[i])
            s = x[i] - (lo + k * dx)
            fk = cdf[k]
            fk1 = cdf[k + 1]
            fx = fk + (s / dx) * (fk1 - fk)
            left = below[k] + 0.5 * s * (fk * fk + fx * fx)
            right = 0.5 * (dx - s) * ((fx - 1.0) ** 2 + (fk1 - 1.0) ** 2) + above[k + 1]
            out[i] = left + right
        return out

    @numba.njit(cache=True)
    def inverse_cdf_nb(cdf, lo, dx, u):
        n = cdf.shape[0]
        out = np.empty(u.shape[0])
        for i in range(u.shape[0]):
            k = np.searchsorted(cdf, u[i], side="right") - 1
            if k < 0:
                k = 0
            elif k > n - 2:
                k = n - 2
            width = cdf[k + 1] - cdf[k]
            t = 0.0
            if width > 0.0:
                t = (u[i] - cdf[k]) / width
                t = min(max(t, 0.0), 1.0)
            out[i] = lo + (k + t) * dx
        return out

else:  # pragma: no cover
    interp_uniform_nb = crps_split_nb = inverse_cdf_nb = None


USE_NUMBA = numba is not None and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"

if USE_NUMBA:
    interp_uniform = interp_uniform_nb
    crps_split = crps_split_nb
    inverse_cdf = inverse_cdf_nb
else:
    interp_uniform = interp_uniform_np
    crps_split = crps_split_np
    inverse_cdf = inverse_cdf_np
