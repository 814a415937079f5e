"""Benchmark harness: upscalers x corpus x repetitions, with report writers.

Native upscaler cells run in a bounded thread pool; remote cells run one at
a time so backend GPU timings stay honest. A failed cell is recorded and
excluded from summaries but never aborts the run.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import quality
from .errors import ConfigError, EmptyCorpus, EmptySamples, TooFewSamples
from .imaging import ImageBuffer, decode_png, encode_png, upscale_lanczos, upscale_nearest

UPSCALER_KINDS = ("native_nearest", "native_lanczos", "remote")

CSV_HEADER = "upscaler,image,repetition,seconds,blurriness,pixelation,peak_vram_mb,mean_load_pct,status"


@dataclass(frozen=True)
class UpscalerSpec:
    id: str
    kind: str
    endpoint: str | None = None
    scale: float = 4.0

    def __post_init__(self):
        if self.kind not in UPSCALER_KINDS:
            raise ConfigError(f"unknown upscaler kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ConfigError(f"upscaler {self.id!r}: remote kind needs an endpoint")
        if self.scale <= 0:
            raise ConfigError(f"upscaler {self.id!r}: scale must be > 0")


@dataclass
class MetricRow:
    upscaler_id: str
    image_id: str
    repetition: int
    seconds: float = 0.0
    blurriness: float = 0.0
    pixelation: float = 0.0
    peak_vram_mb: float | None = None
    mean_load_pct: float | None = None
    status: str = "ok"  # "ok" or "failed: <reason>"

    @property
    def ok(self):
        return self.status == "ok"


@dataclass
class BenchReport:
    rows: list[MetricRow]
    summary: dict[str, dict[str, float]]
    config_hash: str


@dataclass
class BenchConfig:
    corpus_dir: str
    upscalers: list[UpscalerSpec]
    repetitions: int = 1
    period: int = 8
    output_dir: str = "bench_out"
    telemetry_dir: str | None = None
    workers: int | None = None

    @classmethod
    def from_file(cls, path) -> "BenchConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "BenchConfig":
        try:
            specs = [
                UpscalerSpec(
                    id=u["id"],
                    kind=u["kind"],
                    endpoint=u.get("endpoint"),
                    scale=float(u.get("scale", 4.0)),
                )
                for u in raw["upscalers"]
            ]
            return cls(
                corpus_dir=raw["corpus_dir"],
                upscalers=specs,
                repetitions=int(raw.get("repetitions", 1)),
                period=int(raw.get("period", 8)),
                output_dir=raw.get("output_dir", "bench_out"),
                telemetry_dir=raw.get("telemetry_dir"),
                workers=raw.get("workers"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad bench config: {exc}") from exc

    def canonical_hash(self) -> str:
        blob = json.dumps(
            {
                "corpus_dir": self.corpus_dir,
                "upscalers": [
                    {"id": u.id, "kind": u.kind, "endpoint": u.endpoint, "scale": u.scale}
                    for u in sorted(self.upscalers, key=lambda u: u.id)
                ],
                "repetitions": self.repetitions,
                "period": self.period,
            },
            sort_keys=True,
        ).encode()
        return hashlib.sha256(blob).hexdigest()


def _load_corpus(corpus_dir):
    try:
        names = sorted(n for n in os.listdir(corpus_dir) if n.lower().endswith(".png"))
    except OSError as exc:
        raise ConfigError(f"cannot list corpus dir {corpus_dir}: {exc}") from exc
    if not names:
        raise EmptyCorpus(f"no PNG files in {corpus_dir}")
    corpus = []
    for name in names:
        with open(os.path.join(corpus_dir, name), "rb") as fh:
            corpus.append((os.path.splitext(name)[0], decode_png(fh.read())))
    return corpus


def _apply_upscaler(spec: UpscalerSpec, img: ImageBuffer) -> tuple[ImageBuffer, float]:
    """Run one upscale, returning (output, seconds). Timing excludes codec work."""
    if spec.kind == "native_nearest":
        factor = int(spec.scale)
        if factor != spec.scale:
            raise ConfigError(f"upscaler {spec.id!r}: nearest needs an integer scale")
        start = time.perf_counter()
        out = upscale_nearest(img, factor)
        return out, time.perf_counter() - start
    if spec.kind == "native_lanczos":
        start = time.perf_counter()
        out = upscale_lanczos(img, spec.scale)
        return out, time.perf_counter() - start
    from .pipeline import upscale_remote  # local import to avoid a cycle

    start = time.perf_counter()
    out = upscale_remote(spec.endpoint, img, spec.scale)
    return out, time.perf_counter() - start


def _run_cell(spec: UpscalerSpec, image_id, img, rep, cfg: BenchConfig) -> MetricRow:
    row = MetricRow(spec.id, image_id, rep)
    try:
        out, seconds = _apply_upscaler(spec, img)
        row.seconds = seconds
        row.blurriness = quality.blurriness(out)
        row.pixelation = quality.pixelation(out, cfg.period)
    except Exception as exc:  # noqa: BLE001 - per-cell isolation by contract
        row.status = f"failed: {exc}"
        return row
    if cfg.telemetry_dir:
        tpath = os.path.join(cfg.telemetry_dir, spec.id, f"{image_id}.{rep}.jsonl")
        if os.path.exists(tpath):
            try:
                summ = quality.summarize_telemetry(quality.parse_telemetry(tpath))
                row.peak_vram_mb = summ.peak_vram_mb
                row.mean_load_pct = summ.mean_load_pct
            except Exception as exc:  # noqa: BLE001
                row.status = f"failed: telemetry: {exc}"
    return row


def _summarize(rows: list[MetricRow]) -> dict[str, dict[str, float]]:
    summary: dict[str, dict[str, float]] = {}
    for uid in sorted({r.upscaler_id for r in rows}):
        ok = [r for r in rows if r.upscaler_id == uid and r.ok]
        entry: dict[str, float] = {"count": float(len(ok))}
        if ok:
            entry["mean_seconds"] = sum(r.seconds for r in ok) / len(ok)
            entry["mean_blurriness"] = sum(r.blurriness for r in ok) / len(ok)
            entry["mean_pixelation"] = sum(r.pixelation for r in ok) / len(ok)
            vram = [r.peak_vram_mb for r in ok if r.peak_vram_mb is not None]
            load = [r.mean_load_pct for r in ok if r.mean_load_pct is not None]
            if vram:
                entry["mean_peak_vram_mb"] = sum(vram) / len(vram)
            if load:
                entry["mean_load_pct"] = sum(load) / len(load)
        summary[uid] = entry
    return summary


def run_bench(cfg: BenchConfig, write_outputs: bool = True) -> BenchReport:
    corpus = _load_corpus(cfg.corpus_dir)
    native = [u for u in cfg.upscalers if u.kind != "remote"]
    remote = [u for u in cfg.upscalers if u.kind == "remote"]

    cells = [
        (spec, image_id, img, rep)
        for spec in native
        for image_id, img in corpus
        for rep in range(1, cfg.repetitions + 1)
    ]
    workers = cfg.workers or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda c: _run_cell(c[0], c[1], c[2], c[3], cfg), cells))
    for spec in remote:  # one at a time by design
        for image_id, img in corpus:
            for rep in range(1, cfg.repetitions + 1):
                rows.append(_run_cell(spec, image_id, img, rep, cfg))

    rows.sort(key=lambda r: (r.upscaler_id, r.image_id, r.repetition))
    report = BenchReport(rows, _summarize(rows), cfg.canonical_hash())
    if write_outputs:
        os.makedirs(cfg.output_dir, exist_ok=True)
        write_csv(report, os.path.join(cfg.output_dir, "report.csv"))
        write_json(report, os.path.join(cfg.output_dir, "report.json"))
    return report


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.6g}"


def write_csv(report: BenchReport, path) -> None:
    """CSV with one row per cell plus a per-upscaler summary section."""
    lines = [CSV_HEADER]
    for r in report.rows:
        lines.append(",".join([
            r.upscaler_id, r.image_id, str(r.repetition),
            _fmt(r.seconds), _fmt(r.blurriness), _fmt(r.pixelation),
            _fmt(r.peak_vram_mb), _fmt(r.mean_load_pct),
            r.status.replace(",", ";"),
        ]))
    lines.append("")
    lines.append("# summary")
    lines.append("upscaler,mean_seconds,mean_blurriness,mean_pixelation,count")
    for uid, entry in report.summary.items():
        lines.append(",".join([
            uid,
            _fmt(entry.get("mean_seconds")),
            _fmt(entry.get("mean_blurriness")),
            _fmt(entry.get("mean_pixelation")),
            str(int(entry["count"])),
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(report: BenchReport, path) -> None:
    payload = {
        "config_hash": report.config_hash,
        "rows": [
            {
                "upscaler": r.upscaler_id,
                "image": r.image_id,
                "repetition": r.repetition,
                "seconds": r.seconds,
                "blurriness": r.blurriness,
                "pixelation": r.pixelation,
                "peak_vram_mb": r.peak_vram_mb,
                "mean_load_pct": r.mean_load_pct,
                "status": r.status,
            }
            for r in report.rows
        ],
        "summary": report.summary,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


VRAM_COLOR = "#1f77b4"
LOAD_COLOR = "#ff7f0e"


def write_telemetry_chart(samples, path, width: int = 800, height: int = 400) -> None:
    """Dual-axis SVG: VRAM polyline in blue, GPU load polyline in orange."""
    if len(samples) < 2:
        raise TooFewSamples(f"need >= 2 samples, got {len(samples)}")
    margin = 60
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin
    t0, t1 = samples[0].t_ms, samples[-1].t_ms
    t_span = (t1 - t0) or 1
    vram_max = max(s.vram_mb for s in samples) or 1.0

    def x(t):
        return margin + (t - t0) / t_span * plot_w

    def y_load(v):
        return margin + plot_h - v / 100.0 * plot_h

    def y_vram(v):
        return margin + plot_h - v / vram_max * plot_h

    vram_pts = " ".join(f"{x(s.t_ms):.2f},{y_vram(s.vram_mb):.2f}" for s in samples)
    load_pts = " ".join(f"{x(s.t_ms):.2f},{y_load(s.gpu_load_pct):.2f}" for s in samples)
    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">
<rect width="{width}" height="{height}" fill="white"/>
<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{margin + plot_h}" stroke="black"/>
<line x1="{margin + plot_w}" y1="{margin}" x2="{margin + plot_w}" y2="{margin + plot_h}" stroke="black"/>
<line x1="{margin}" y1="{margin + plot_h}" x2="{margin + plot_w}" y2="{margin + plot_h}" stroke="black"/>
<text x="{margin}" y="{margin - 20}" fill="{VRAM_COLOR}">VRAM (MB, max {vram_max:g})</text>
<text x="{margin + plot_w - 150}" y="{margin - 20}" fill="{LOAD_COLOR}">GPU load (%)</text>
<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle">time (ms)</text>
<polyline fill="none" stroke="{VRAM_COLOR}" stroke-width="2" points="{vram_pts}"/>
<polyline fill="none" stroke="{LOAD_COLOR}" stroke-width="2" points="{load_pts}"/>
</svg>
"""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)


def write_latency_report(pairs, path) -> None:
    """Per-method count/mean/min/max of enhancement wall time, CSV."""
    if not pairs:
        raise EmptySamples("no prompt pairs to report")
    methods = sorted({p.method for p in pairs})
    lines = ["method,count,mean_seconds,min_seconds,max_seconds"]
    for m in methods:
        vals = [p.elapsed for p in pairs if p.method == m]
        lines.append(
            f"{m},{len(vals)},{sum(vals) / len(vals):.6g},{min(vals):.6g},{max(vals):.6g}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
