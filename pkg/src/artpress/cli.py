"""Command-line surface for the engine.

Exit codes: 0 ok, 2 config error, 3 backend error, 4 product validation
insufficient.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import bench as bench_mod
from . import enhance as enhance_mod
from . import pipeline as pipeline_mod
from . import quality as quality_mod
from . import ragstore
from .errors import (
    ArtpressError,
    BackendTimeout,
    ConfigError,
    HttpError,
    ImageDimensionMismatch,
    MalformedResponse,
    RetriesExhausted,
)
from .imaging import decode_png, encode_png

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_INSUFFICIENT = 4

_BACKEND_ERRORS = (BackendTimeout, HttpError, MalformedResponse,
                   RetriesExhausted, ImageDimensionMismatch)


def _die(exc):
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, _BACKEND_ERRORS):
        sys.exit(EXIT_BACKEND)
    sys.exit(EXIT_CONFIG)


def _read_png(path):
    try:
        with open(path, "rb") as fh:
            return decode_png(fh.read())
    except (OSError, ArtpressError) as exc:
        _die(exc)


@click.group()
def main():
    """Base prompt to print-ready artwork: enhance, generate, upscale, verify."""


@main.group()
def db():
    """Prompt database maintenance."""


@db.command("ingest")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def db_ingest(input_path, out_path):
    """Embed and validate a JSONL prompt database, writing the sealed store."""
    try:
        store = ragstore.ingest(input_path)
        ragstore.save(store, out_path)
    except (OSError, ArtpressError) as exc:
        _die(exc)
    click.echo(f"ingested {len(store)} records -> {out_path}")


@main.command("enhance")
@click.option("--method", required=True,
              type=click.Choice(["template", "llm", "rag-multishot"]))
@click.option("--base", required=True)
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--endpoint", default=None, help="LLM endpoint (or 'mock'); defaults to ARTPRESS_LLM_URL")
@click.option("--out", "out_path", default=None, type=click.Path())
def enhance_cmd(method, base, store_path, seed, endpoint, out_path):
    """Turn a base prompt into a positive/negative prompt pair."""
    try:
        store = ragstore.ingest(store_path)
        if method == "template":
            pair = enhance_mod.enhance_template(base, store, seed)
        else:
            endpoint = endpoint or os.environ.get("ARTPRESS_LLM_URL")
            if endpoint == "mock":
                backend = pipeline_mod.EchoChatBackend()
            elif endpoint:
                backend = enhance_mod.HttpChatBackend(endpoint)
            else:
                raise ConfigError("no LLM endpoint (use --endpoint or ARTPRESS_LLM_URL)")
            if method == "llm":
                pair = enhance_mod.enhance_llm(base, backend)
            else:
                pair = enhance_mod.enhance_multishot(base, store, backend)
    except (OSError, ArtpressError) as exc:
        _die(exc)
    blob = json.dumps(pair.to_json_dict(), indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(blob + "\n")
    else:
        click.echo(blob)


@main.command("generate")
@click.option("--pair", "pair_path", required=True, type=click.Path())
@click.option("--endpoint", default=None, help="generator endpoint (or 'mock'); defaults to ARTPRESS_GEN_URL")
@click.option("--size", default=1024, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def generate_cmd(pair_path, endpoint, size, seed, out_path):
    """Generate an image from a prompt pair via a backend."""
    endpoint = endpoint or os.environ.get("ARTPRESS_GEN_URL") or "mock"
    try:
        with open(pair_path, encoding="utf-8") as fh:
            pair = json.load(fh)
        req = pipeline_mod.GenerateRequest(
            positive=pair["positive"], negative=pair.get("negative", ""),
            width=size, height=size, seed=seed,
        )
        img = pipeline_mod.generate_remote(endpoint, req)
        with open(out_path, "wb") as fh:
            fh.write(encode_png(img))
    except (OSError, KeyError, json.JSONDecodeError, ArtpressError) as exc:
        _die(exc)
    click.echo(f"wrote {img.width}x{img.height} -> {out_path}")


@main.command("upscale")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--upscaler", default="lanczos",
              help="nearest | lanczos | remote:<url> | mock")
@click.option("--scale", default=4.0, type=float)
@click.option("--out", "out_path", required=True, type=click.Path())
def upscale_cmd(in_path, upscaler, scale, out_path):
    """Upscale a PNG with a native kernel or a remote backend."""
    img = _read_png(in_path)
    try:
        out = pipeline_mod.apply_upscaler(upscaler, img, scale)
        with open(out_path, "wb") as fh:
            fh.write(encode_png(out))
    except (OSError, ArtpressError) as exc:
        _die(exc)
    click.echo(f"wrote {out.width}x{out.height} -> {out_path}")


@main.command("metrics")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--period", default=8, type=int)
def metrics_cmd(in_path, period):
    """Print blurriness and pixelation scores as JSON."""
    img = _read_png(in_path)
    try:
        scores = quality_mod.score(img, period)
    except ArtpressError as exc:
        _die(exc)
    click.echo(json.dumps(
        {"blurriness": scores.blurriness, "pixelation": scores.pixelation}, indent=2))


@main.command("bench")
@click.option("--config", "config_path", required=True, type=click.Path())
def bench_cmd(config_path):
    """Run the upscaler benchmark described by a JSON config."""
    try:
        cfg = bench_mod.BenchConfig.from_file(config_path)
        report = bench_mod.run_bench(cfg)
    except (OSError, ArtpressError) as exc:
        _die(exc)
    ok = sum(1 for r in report.rows if r.ok)
    click.echo(f"{len(report.rows)} cells ({ok} ok) -> {cfg.output_dir}/report.csv")


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path())
def run_cmd(config_path):
    """Run the full pipeline: enhance, generate, upscale, metrics, validate."""
    try:
        cfg = pipeline_mod.PipelineConfig.from_file(config_path)
        manifest = pipeline_mod.run_pipeline(cfg)
    except _BACKEND_ERRORS as exc:
        _die(exc)
    except (OSError, ArtpressError) as exc:
        _die(exc)
    verdict = manifest["verdict"]
    click.echo(json.dumps(manifest, indent=2, sort_keys=True))
    if not verdict["ok"]:
        sys.exit(EXIT_INSUFFICIENT)


@main.command("validate")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--product", required=True,
              help="art_print | duvet | WxH (e.g. 6500x6500)")
def validate_cmd(in_path, product):
    """Check an image against a print product's minimum resolution."""
    img = _read_png(in_path)
    try:
        spec = pipeline_mod.product_spec(product)
    except ArtpressError as exc:
        _die(exc)
    verdict = pipeline_mod.validate_for_product(img, spec)
    click.echo(json.dumps({
        "product": spec.name,
        "width": img.width,
        "height": img.height,
        "ok": verdict.ok,
        "required_extra_scale": verdict.required_extra_scale,
    }, indent=2))
    if not verdict.ok:
        sys.exit(EXIT_INSUFFICIENT)


if __name__ == "__main__":
    main()
