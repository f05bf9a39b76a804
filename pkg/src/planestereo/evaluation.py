"""Accuracy over the high-gradient region and wall-clock timing statistics."""

import csv
import io
import json
import os
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .core import DisparityMap
from .errors import NoOverlap

DEFAULT_THRESHOLDS = (2.0, 3.0, 4.0, 5.0)

# Published single-thread timings (ms) for 1, 2 and 4 iterations, by resolution.
REFERENCE_MS = {
    (320, 240): {1: 3.0, 2: 6.4, 4: 18.7},
    (640, 480): {1: 8.2, 2: 19.2, 4: 64.9},
    (800, 600): {1: 10.9, 2: 27.4, 4: 99.2},
    (1280, 720): {1: 18.2, 2: 46.0, 4: 172.9},
    (1920, 1080): {1: 35.9, 2: 81.0, 4: 287.2},
}
# KITTI-sized frames (about 1242 x 375)
REFERENCE_KITTI_MS = {1: 10.8, 2: 28.9, 4: 58.2}
# fraction of edge pixels within each threshold on KITTI
REFERENCE_KITTI_ACCURACY = {
    1: {2.0: 0.831, 3.0: 0.899, 4.0: 0.929, 5.0: 0.947},
    2: {2.0: 0.835, 3.0: 0.902, 4.0: 0.932, 5.0: 0.949},
    4: {2.0: 0.854, 3.0: 0.914, 4.0: 0.940, 5.0: 0.955},
}


def reference_ms(width, height, n_iters):
    """Closest published timing for a frame size, or None."""
    if abs(width - 1242) <= 16 and abs(height - 375) <= 16:
        return REFERENCE_KITTI_MS.get(n_iters)
    return REFERENCE_MS.get((width, height), {}).get(n_iters)


@dataclass
class AccuracyReport:
    thresholds: tuple
    fractions: tuple
    n_evaluated: int
    mean_abs_error: float

    def as_dict(self):
        return {
            "n_evaluated": self.n_evaluated,
            "mean_abs_error": self.mean_abs_error,
            **{f"<{t:g}px": f for t, f in zip(self.thresholds, self.fractions)},
        }

    def table(self):
        head = " ".join(f"{'<' + format(t, 'g') + 'px':>8}" for t in self.thresholds)
        row = " ".join(f"{100 * f:7.2f}%" for f in self.fractions)
        return f"{head}  {'MAE':>8}  {'pixels':>8}\n{row}  {self.mean_abs_error:8.4f}  {self.n_evaluated:8d}"


def _as_map(m):
    return m if isinstance(m, DisparityMap) else DisparityMap.from_array(m)


def accuracy(pred, gt, mask=None, thresholds=DEFAULT_THRESHOLDS):
    """Fraction of evaluated pixels with ``|pred - gt| < t`` for each threshold.

    Evaluated pixels are valid in both maps and inside ``mask`` (all pixels
    when ``mask`` is None).
    """
    pred, gt = _as_map(pred), _as_map(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction {pred.shape} and ground truth {gt.shape} differ in size")
    ev = pred.valid & gt.valid
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != pred.shape:
            raise ValueError(f"mask {mask.shape} does not match {pred.shape}")
        ev &= mask
    n = int(ev.sum())
    if n == 0:
        raise NoOverlap("no pixel is valid in prediction, ground truth and mask")
    err = np.abs(pred.disparity[ev] - gt.disparity[ev])
    ts = tuple(float(t) for t in sorted(thresholds))
    fr = tuple(float(np.count_nonzero(err < t)) / n for t in ts)
    return AccuracyReport(ts, fr, n, float(err.mean()))


@dataclass
class TimingReport:
    total_ms: list
    stage_ms: dict = field(default_factory=dict)  # stage -> list of per-repeat ms
    label: str = ""

    @property
    def mean(self):
        return statistics.fmean(self.total_ms)

    @property
    def median(self):
        return statistics.median(self.total_ms)

    @property
    def min(self):
        return min(self.total_ms)

    @property
    def hz(self):
        return 1000.0 / self.median if self.median > 0 else float("inf")

    def stage_median(self):
        return {k: statistics.median(v) for k, v in self.stage_ms.items()}

    def summary(self):
        return {
            "label": self.label,
            "repeats": len(self.total_ms),
            "mean_ms": self.mean,
            "median_ms": self.median,
            "min_ms": self.min,
            "hz": self.hz,
            **{f"{k}_ms": v for k, v in self.stage_median().items()},
        }


def _stage_times(out):
    # pipeline results carry per-iteration stage timings; sum them per stage
    trace = getattr(out, "trace", None)
    if not trace:
        return {}
    acc = {}
    for rec in trace:
        for k, v in rec.stage_ms.items():
            acc[k] = acc.get(k, 0.0) + v
    return acc


def _pin_one_cpu():
    if not hasattr(os, "sched_getaffinity"):
        return None
    old = os.sched_getaffinity(0)
    os.sched_setaffinity(0, {min(old)})
    return old


def benchmark(fn, repeats=10, warmup=1, pin_cpu=True, label=""):
    """Time ``fn()`` ``repeats`` times after ``warmup`` untimed calls.

    With ``pin_cpu`` the process is restricted to one logical CPU for the
    duration. Stage times are collected when ``fn`` returns a pipeline result.
    """
    if repeats < 3:
        raise ValueError(f"need at least 3 repeats, got {repeats}")
    old = _pin_one_cpu() if pin_cpu else None
    try:
        for _ in range(warmup):
            fn()
        totals, stages = [], {}
        for _ in range(repeats):
            t0 = time.perf_counter()
            out = fn()
            totals.append((time.perf_counter() - t0) * 1e3)
            for k, v in _stage_times(out).items():
                stages.setdefault(k, []).append(v)
    finally:
        if old is not None:
            os.sched_setaffinity(0, old)
    return TimingReport(totals, stages, label)


def to_csv(rows):
    """Rows of dicts to CSV text; the header is the union of keys in first-seen order."""
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def to_json_lines(rows):
    return "".join(json.dumps(r, sort_keys=False) + "\n" for r in rows)


__all__ = [
    "AccuracyReport",
    "DEFAULT_THRESHOLDS",
    "REFERENCE_KITTI_ACCURACY",
    "REFERENCE_KITTI_MS",
    "REFERENCE_MS",
    "TimingReport",
    "accuracy",
    "benchmark",
    "reference_ms",
    "to_csv",
    "to_json_lines",
]
