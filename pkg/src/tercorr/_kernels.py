"""Numba kernels: sequential detector thinning and tag-pair histogramming.

These are the only hot loops in the package.  Everything here takes plain
int64/float64 arrays so the compiled signatures stay stable and the disk
cache is reused across runs.
"""
import numpy as np
from numba import njit

TER_HEAVISIDE = 0
TER_TABULATED = 1


@njit(cache=True)
def thin_recovery(tags, u, kind, t_d_ps, grid_ps, eta, eta_inf, q, last_ps):
    """Scan tags in order, accepting each with probability q*eta(dt).

    dt is the time since the last *accepted* tag; a negative last_ps means
    the detector starts idle (fully recovered).  Returns the accepted tags
    and the updated last-acceptance time so callers can chunk the scan.
    """
    out = np.empty(tags.size, np.int64)
    m = 0
    last = last_ps
    for i in range(tags.size):
        if last < 0:
            e = eta_inf
        else:
            dt = tags[i] - last
            if kind == TER_HEAVISIDE:
                e = eta_inf if dt >= t_d_ps else 0.0
            else:
                if dt >= grid_ps[grid_ps.size - 1]:
                    e = eta_inf
                elif dt <= grid_ps[0]:
                    e = eta[0]
                else:
                    j = np.searchsorted(grid_ps, dt)
                    if grid_ps[j] == dt:
                        e = eta[j]
                    else:
                        f = (dt - grid_ps[j - 1]) / (grid_ps[j] - grid_ps[j - 1])
                        e = eta[j - 1] + f * (eta[j] - eta[j - 1])
        if u[i] < q * e:
            out[m] = tags[i]
            m += 1
            last = tags[i]
    return out[:m], last


@njit(cache=True)
def pair_hist(a, b, bin_ps, n_half):
    """Histogram of delays b - a in centered bins of width bin_ps.

    Bin k covers delays [k*bin - bin//2, k*bin + (bin-1)//2] for
    k in [-n_half, n_half].  Two-pointer sweep: O(n_a + n_b + pairs).
    """
    lo_off = n_half * bin_ps + bin_ps // 2
    hi_off = n_half * bin_ps + (bin_ps - 1) // 2
    hist = np.zeros(2 * n_half + 1, dtype=np.int64)
    half = bin_ps // 2
    lo = 0
    hi = 0
    nb = b.size
    for i in range(a.size):
        t = a[i]
        tmin = t - lo_off
        tmax = t + hi_off
        while lo < nb and b[lo] < tmin:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < nb and b[hi] <= tmax:
            hi += 1
        for j in range(lo, hi):
            k = (b[j] - t + half) // bin_ps
            hist[k + n_half] += 1
    return hist


@njit(cache=True)
def triple_hist(a, b, c, bin_ps, n_half):
    """2-D histogram of delay pairs (b - a, c - a), centered bins."""
    lo_off = n_half * bin_ps + bin_ps // 2
    hi_off = n_half * bin_ps + (bin_ps - 1) // 2
    nbin = 2 * n_half + 1
    hist = np.zeros((nbin, nbin), dtype=np.int64)
    half = bin_ps // 2
    lo_b = 0
    hi_b = 0
    lo_c = 0
    hi_c = 0
    nb = b.size
    nc = c.size
    for i in range(a.size):
        t = a[i]
        tmin = t - lo_off
        tmax = t + hi_off
        while lo_b < nb and b[lo_b] < tmin:
            lo_b += 1
        if hi_b < lo_b:
            hi_b = lo_b
        while hi_b < nb and b[hi_b] <= tmax:
            hi_b += 1
        while lo_c < nc and c[lo_c] < tmin:
            lo_c += 1
        if hi_c < lo_c:
            hi_c = lo_c
        while hi_c < nc and c[hi_c] <= tmax:
            hi_c += 1
        for j in range(lo_b, hi_b):
            kb = (b[j] - t + half) // bin_ps + n_half
            for l in range(lo_c, hi_c):
                kc = (c[l] - t + half) // bin_ps + n_half
                hist[kb, kc] += 1
    return hist
