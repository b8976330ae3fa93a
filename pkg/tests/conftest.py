"""Shared helpers: brute-force reference implementations the fast kernels
are checked against, plus small stream-building utilities."""
from collections import Counter

import numpy as np

from tercorr.sources import TimeTagStream


def make_stream(tags, duration_ps, channel=0):
    return TimeTagStream(channel, np.asarray(tags, dtype=np.int64),
                         int(duration_ps))


def brute_pair_histogram(a, b, bin_ps, max_tau_ps):
    """All-pairs O(n^2) reference for the pair-correlation kernel.

    Bins are centered on integer multiples of bin_ps: a delay tau falls in
    bin k = floor((tau + bin_ps//2) / bin_ps), kept while |k| <= n_half.
    """
    n_half = max_tau_ps // bin_ps
    half = bin_ps // 2
    counts = np.zeros(2 * n_half + 1, dtype=np.int64)
    for ta in np.asarray(a, dtype=np.int64):
        for tb in np.asarray(b, dtype=np.int64):
            k = (int(tb) - int(ta) + half) // bin_ps
            if -n_half <= k <= n_half:
                counts[k + n_half] += 1
    return counts


def brute_triple_histogram(a, b, c, bin_ps, max_tau_ps):
    """All-triples reference for the third-order kernel."""
    n_half = max_tau_ps // bin_ps
    half = bin_ps // 2
    counts = np.zeros((2 * n_half + 1, 2 * n_half + 1), dtype=np.int64)
    for ta in np.asarray(a, dtype=np.int64):
        for tb in np.asarray(b, dtype=np.int64):
            k1 = (int(tb) - int(ta) + half) // bin_ps
            if not -n_half <= k1 <= n_half:
                continue
            for tc in np.asarray(c, dtype=np.int64):
                k2 = (int(tc) - int(ta) + half) // bin_ps
                if -n_half <= k2 <= n_half:
                    counts[k1 + n_half, k2 + n_half] += 1
    return counts


def brute_same_bin_coincidences(streams, bin_ps):
    """Counter-based reference for n-fold same-bin coincidence counting.

    Tags are assigned to absolute cells floor(t / bin_ps); the coincidence
    count is the sum over cells of the product of per-channel multiplicities.
    """
    counters = [Counter(np.asarray(s.tags) // bin_ps) for s in streams]
    common = set(counters[0])
    for c in counters[1:]:
        common &= set(c)
    total = 0
    for cell in common:
        prod = 1
        for c in counters:
            prod *= c[cell]
        total += prod
    return total


def random_stream(rng, n, duration_ps, channel=0):
    """Sorted, duplicate-free uniform tags (a generic test pattern)."""
    tags = np.sort(rng.choice(np.int64(duration_ps), size=n, replace=False))
    return TimeTagStream(channel, tags.astype(np.int64), int(duration_ps))
