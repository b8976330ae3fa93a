"""End-to-end pipelines: source generation, m-way splitting, detection.

Long thermal runs cannot hold the whole intensity trace in memory, so
generation proceeds in independently seeded time segments that are
concatenated per channel; segments are long compared with the coherence
time, making the lost cross-segment correlation negligible.  Detector
state is applied after concatenation, so recovery carries across segment
boundaries exactly.  All randomness derives from one root seed through
numpy's SeedSequence spawning, which keeps every channel and segment
independent and the whole pipeline reproducible.
"""
from __future__ import annotations

import math

import numpy as np

from .detector import DetectorConfig, detect, split_stream
from .errors import ParameterError
from .sources import (
    PS_PER_S,
    SourceKind,
    SourceModel,
    TimeTagStream,
    sample_antibunched_stream,
    sample_doubly_stochastic_stream,
    sample_poisson_stream,
    sample_thermal_intensity,
)

#: cap on intensity-grid cells per thermal segment
SEGMENT_CELL_BUDGET = 6_000_000
#: cap on expected tags per segment
SEGMENT_TAG_BUDGET = 20_000_000


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _thermal_segment_duration(model: SourceModel, duration: float,
                              grid_dt: float) -> float:
    seg = min(duration, SEGMENT_CELL_BUDGET * grid_dt,
              SEGMENT_TAG_BUDGET / model.mean_rate)
    # at least ~100 coherence times so segment edges carry no weight
    return max(seg, 100.0 * model.T)


def simulate_split_streams(model: SourceModel, m: int, duration: float, seed,
                           segment_s: float | None = None,
                           grid_dt: float | None = None) -> list[TimeTagStream]:
    """Source stream routed through an ideal balanced 1-to-m splitter.

    Returns m channel streams covering the full duration.  Thermal light
    is synthesized segment by segment on a grid of grid_dt (default
    T/20); Poissonian light is segmented only to bound memory; the
    antibunched renewal stream is generated in one pass to preserve its
    interval structure.
    """
    if m < 1:
        raise ParameterError("m must be at least 1")
    if duration <= 0:
        raise ParameterError("duration must be positive")

    if model.kind is SourceKind.THERMAL_BUNCHED:
        if grid_dt is None:
            grid_dt = model.T / 20.0
        seg = segment_s if segment_s is not None else \
            _thermal_segment_duration(model, duration, grid_dt)
    elif model.kind is SourceKind.POISSONIAN:
        seg = segment_s if segment_s is not None else \
            min(duration, SEGMENT_TAG_BUDGET / model.mean_rate)
    else:
        seg = duration

    n_seg = max(1, int(math.ceil(duration / seg - 1e-9)))
    seg_seeds = _as_seedseq(seed).spawn(n_seg)
    # integer-ps segment boundaries, so the assembled window never drifts
    # from the requested duration no matter how it is carved up
    total_ps = int(round(duration * PS_PER_S))
    bounds = np.round(np.linspace(0, total_ps, n_seg + 1)).astype(np.int64)

    parts = [[] for _ in range(m)]
    offset = 0
    for k in range(n_seg):
        seg_s = (bounds[k + 1] - bounds[k]) / PS_PER_S
        trace_seed, tag_seed, split_seed = seg_seeds[k].spawn(3)
        if model.kind is SourceKind.THERMAL_BUNCHED:
            trace = sample_thermal_intensity(model.mean_rate, model.T, seg_s,
                                             grid_dt, trace_seed)
            stream = sample_doubly_stochastic_stream(trace, tag_seed)
        elif model.kind is SourceKind.POISSONIAN:
            stream = sample_poisson_stream(model.mean_rate, seg_s, tag_seed)
        else:
            stream = sample_antibunched_stream(model.mean_rate, model.T,
                                               seg_s, tag_seed)
        for ch, piece in enumerate(split_stream(stream, m, split_seed)):
            parts[ch].append(piece.tags + offset)
        offset += stream.duration_ps
    total_ps = offset
    return [
        TimeTagStream(ch, np.concatenate(parts[ch]) if parts[ch] else
                      np.empty(0, dtype=np.int64), total_ps)
        for ch in range(m)
    ]


def apply_detectors(streams, config: DetectorConfig, seed) -> list[TimeTagStream]:
    """Run each channel through an independent detector with one root seed."""
    children = _as_seedseq(seed).spawn(len(streams))
    return [detect(s, config, child) for s, child in zip(streams, children)]


def simulate_detected_channels(model: SourceModel, m: int,
                               config: DetectorConfig, duration: float, seed,
                               segment_s: float | None = None,
                               grid_dt: float | None = None,
                               return_incident: bool = False):
    """Full pipeline: source, m-way split, one detector per channel.

    Returns the list of detected streams, or (detected, incident) when
    return_incident is set.
    """
    src_seed, det_seed = _as_seedseq(seed).spawn(2)
    incident = simulate_split_streams(model, m, duration, src_seed,
                                      segment_s=segment_s, grid_dt=grid_dt)
    detected = apply_detectors(incident, config, det_seed)
    if return_incident:
        return detected, incident
    return detected
