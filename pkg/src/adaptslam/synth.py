"""Deterministic synthetic keyframe streams and bandwidth traces.

A camera walks a closed loop twice; covisibility weight between two
keyframes is the expected count of shared features, falling off with
distance and scaled by each frame's texture quality. The second lap revisits
the first, giving loop-closure edges.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .graph import KeyframeRecord
from .sim import BandwidthTrace


def make_stream(
    n_slots: int = 60,
    per_slot: int = 2,
    slot_seconds: float = 1.0,
    seed: int = 7,
    features: float = 200.0,
    radius: float = 15.0,
    laps: float = 2.0,
    imu: bool = False,
    min_quality: float = 0.3,
) -> list[KeyframeRecord]:
    rng = np.random.default_rng(seed)
    n = n_slots * per_slot
    # uneven speed along the loop
    steps = rng.gamma(4.0, 1.0, size=n)
    s = np.cumsum(steps)
    s = s / s[-1] * (2 * math.pi * laps)
    loop_r = 10.0
    pos = np.stack([loop_r * np.cos(s), loop_r * np.sin(s)], axis=1)
    pos += rng.normal(0, 0.3, size=pos.shape)
    quality = np.clip(rng.beta(2.0, 1.2, size=n), min_quality, 1.0)

    records = []
    for i in range(n):
        covis = []
        for j in range(i):
            dist = float(np.linalg.norm(pos[i] - pos[j]))
            overlap = max(0.0, 1.0 - dist / radius)
            w = math.floor(features * quality[i] * quality[j] * overlap**2)
            if w >= 1:
                covis.append([j, w])
        ts = (i // per_slot) * slot_seconds + (i % per_slot) * slot_seconds / per_slot
        records.append(KeyframeRecord(i, round(ts, 9), imu and i > 0, tuple(map(tuple, covis))))
    return records


def make_trace(
    n_slots: int = 60,
    per_slot: int = 2,
    keyframe_bits: float = 3.2e5,
    fraction: float = 0.5,
    seed: int = 11,
) -> BandwidthTrace:
    """Per-slot capacity fluctuating around ``fraction`` of the arrival rate."""
    rng = np.random.default_rng(seed)
    mean = fraction * per_slot
    counts = rng.poisson(mean, size=n_slots)
    # rescale the total so the long-run share is exactly ``fraction``
    target = int(round(mean * n_slots))
    while counts.sum() > target:
        counts[rng.integers(n_slots)] -= 1
        counts = np.maximum(counts, 0)
    while counts.sum() < target:
        counts[rng.integers(n_slots)] += 1
    return BandwidthTrace(tuple(range(n_slots)), tuple(float(c * keyframe_bits) for c in counts))


def record_to_json(rec: KeyframeRecord) -> str:
    raw = {"id": rec.id, "timestamp_s": rec.timestamp_s, "imu_to_prev": rec.imu_to_prev,
           "covis": [[o, w] for o, w in rec.covis]}
    if rec.in_global:
        raw["global"] = True
    return json.dumps(raw)


def write_stream(records, path) -> None:
    Path(path).write_text("".join(record_to_json(r) + "\n" for r in records))
