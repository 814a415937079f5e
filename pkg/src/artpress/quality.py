"""No-reference quality metrics and GPU telemetry ingestion/aggregation.

Blurriness is inverse Laplacian variance mapped into (0, 1], so higher means
blurrier. Pixelation is the ratio of block-boundary gradient to global
gradient, so nearest-neighbor blocks score high and smooth resamples low.
Telemetry arrives as JSONL from a sidecar sampler; this module never touches
GPU libraries itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySamples,
    NonMonotonicTime,
    ParseError,
    RangeError,
    TooSmall,
)
from .imaging import ImageBuffer, luma


@dataclass(frozen=True)
class TelemetrySample:
    t_ms: int
    gpu_load_pct: float
    vram_mb: float
    device: str


@dataclass(frozen=True)
class TelemetrySummary:
    mean_load_pct: float
    max_load_pct: float
    peak_vram_mb: float
    duration_ms: int
    sample_count: int


@dataclass(frozen=True)
class QualityScores:
    blurriness: float
    pixelation: float


def blurriness(img: ImageBuffer) -> float:
    """Inverse variance of the 3x3 Laplacian over the image interior."""
    if img.width < 3 or img.height < 3:
        raise TooSmall(f"need at least 3x3, got {img.width}x{img.height}")
    y = luma(img)
    lap = (y[:-2, 1:-1] + y[2:, 1:-1] + y[1:-1, :-2] + y[1:-1, 2:]
           - 4.0 * y[1:-1, 1:-1])
    v = float(np.var(lap))  # population variance
    return 1.0 / (1.0 + v)


def pixelation(img: ImageBuffer, period: int = 8) -> float:
    """Block-boundary gradient over global gradient on the luma plane.

    Boundary diffs (columns and rows at multiples of ``period``) and global
    diffs are each pooled into a single mean before taking the ratio.
    """
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period!r}")
    if img.width <= period or img.height <= period:
        raise TooSmall(f"need sides > {period}, got {img.width}x{img.height}")
    y = luma(img)
    h_diff = np.abs(np.diff(y, axis=1))  # |Y(r,c) - Y(r,c-1)| at column c
    v_diff = np.abs(np.diff(y, axis=0))

    bound_cols = np.arange(period, img.width, period) - 1  # diff index for column c
    bound_rows = np.arange(period, img.height, period) - 1
    boundary_sum = float(h_diff[:, bound_cols].sum() + v_diff[bound_rows, :].sum())
    boundary_n = h_diff[:, bound_cols].size + v_diff[bound_rows, :].size
    b = boundary_sum / boundary_n if boundary_n else 0.0
    g = float(h_diff.sum() + v_diff.sum()) / (h_diff.size + v_diff.size)
    return b / (g + 1e-9)


def score(img: ImageBuffer, period: int = 8) -> QualityScores:
    return QualityScores(blurriness=blurriness(img), pixelation=pixelation(img, period))


def parse_telemetry(path) -> list[TelemetrySample]:
    """Read and validate one run's JSONL telemetry."""
    samples = []
    last_t = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, str(exc)) from exc
            try:
                t_ms = int(raw["t_ms"])
                load = float(raw["gpu_load_pct"])
                vram = float(raw["vram_mb"])
                device = str(raw.get("device", ""))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(line_no, f"bad sample fields: {exc}") from exc
            if t_ms < 0:
                raise RangeError(f"line {line_no}: t_ms {t_ms} < 0")
            if not 0.0 <= load <= 100.0:
                raise RangeError(f"line {line_no}: gpu_load_pct {load} outside [0, 100]")
            if vram < 0.0:
                raise RangeError(f"line {line_no}: vram_mb {vram} < 0")
            if last_t is not None and t_ms < last_t:
                raise NonMonotonicTime(f"line {line_no}: t_ms {t_ms} after {last_t}")
            last_t = t_ms
            samples.append(TelemetrySample(t_ms, load, vram, device))
    return samples


def summarize_telemetry(samples: list[TelemetrySample]) -> TelemetrySummary:
    if not samples:
        raise EmptySamples("no telemetry samples")
    loads = [s.gpu_load_pct for s in samples]
    return TelemetrySummary(
        mean_load_pct=sum(loads) / len(loads),
        max_load_pct=max(loads),
        peak_vram_mb=max(s.vram_mb for s in samples),
        duration_ms=samples[-1].t_ms - samples[0].t_ms,
        sample_count=len(samples),
    )
