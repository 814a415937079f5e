"""End-to-end orchestration: enhance -> generate -> upscale -> metrics -> validate.

Backends are addressed by URL; the literal endpoint ``mock`` selects fully
deterministic in-process stand-ins so a whole run is reproducible offline.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np
import requests

from . import enhance, quality, ragstore
from .errors import (
    BackendTimeout,
    ConfigError,
    DecodeError,
    HttpError,
    ImageDimensionMismatch,
)
from .imaging import ImageBuffer, decode_png, encode_png, upscale_lanczos, upscale_nearest

MIN_GEN_SIDE = 64
MAX_GEN_SIDE = 2048

PRODUCTS = {
    "art_print": (6500, 6500),
    "duvet": (7632, 6480),
}


@dataclass(frozen=True)
class ProductSpec:
    name: str
    min_width: int
    min_height: int

    def __post_init__(self):
        if self.min_width < 1 or self.min_height < 1:
            raise ConfigError(f"product {self.name!r}: minima must be >= 1")


def product_spec(name: str) -> ProductSpec:
    """Resolve a preset name or a WxH literal into a ProductSpec."""
    if name in PRODUCTS:
        w, h = PRODUCTS[name]
        return ProductSpec(name, w, h)
    if "x" in name:
        try:
            w, h = (int(part) for part in name.lower().split("x", 1))
            return ProductSpec(name, w, h)
        except ValueError:
            pass
    raise ConfigError(f"unknown product {name!r} (presets: {', '.join(PRODUCTS)}, or WxH)")


@dataclass(frozen=True)
class Verdict:
    ok: bool
    required_extra_scale: float | None = None


def validate_for_product(img: ImageBuffer, spec: ProductSpec) -> Verdict:
    """Check print-resolution fitness; report the residual uniform scale if short."""
    if img.width >= spec.min_width and img.height >= spec.min_height:
        return Verdict(ok=True)
    scale = max(spec.min_width / img.width, spec.min_height / img.height)
    return Verdict(ok=False, required_extra_scale=scale)


@dataclass
class GenerateRequest:
    positive: str
    negative: str
    width: int
    height: int
    seed: int

    def validate(self):
        for side, label in ((self.width, "width"), (self.height, "height")):
            if not MIN_GEN_SIDE <= side <= MAX_GEN_SIDE:
                raise ConfigError(
                    f"{label} {side} outside [{MIN_GEN_SIDE}, {MAX_GEN_SIDE}]"
                )


def mock_generate(req: GenerateRequest) -> ImageBuffer:
    """Seeded-noise stand-in for a diffusion backend; deterministic per seed."""
    req.validate()
    rng = np.random.default_rng(req.seed)
    pixels = rng.integers(0, 256, size=(req.height, req.width, 3), dtype=np.uint8)
    return ImageBuffer(pixels)


class EchoChatBackend:
    """Deterministic offline chat backend: replies with the last user message."""

    def send(self, req):
        users = [m["content"] for m in req.messages if m["role"] == "user"]
        return {"content": users[-1] if users else ""}


class FailingBackend:
    """Injected where a code path must provably make no network calls."""

    def send(self, req):
        raise AssertionError("unexpected backend call")


def _post_image(endpoint, payload, timeout):
    try:
        resp = requests.post(endpoint, json=payload, timeout=timeout)
    except requests.Timeout as exc:
        raise BackendTimeout(str(exc)) from exc
    except requests.ConnectionError as exc:
        raise HttpError(0, str(exc)) from exc
    if resp.status_code != 200:
        raise HttpError(resp.status_code, resp.text[:200])
    try:
        body = resp.json()
        png = base64.b64decode(body["png_b64"])
    except (ValueError, KeyError, TypeError) as exc:
        raise DecodeError(f"bad backend payload: {exc}") from exc
    return decode_png(png)


def generate_remote(endpoint: str, req: GenerateRequest, timeout: float = 300.0) -> ImageBuffer:
    """Request one image from a generation backend and verify its dimensions."""
    req.validate()
    if endpoint == "mock":
        img = mock_generate(req)
    else:
        img = _post_image(
            endpoint.rstrip("/") + "/generate",
            {
                "positive": req.positive,
                "negative": req.negative,
                "width": req.width,
                "height": req.height,
                "seed": req.seed,
            },
            timeout,
        )
    if img.width != req.width or img.height != req.height:
        raise ImageDimensionMismatch(
            f"backend returned {img.width}x{img.height}, wanted {req.width}x{req.height}"
        )
    return img


def upscale_remote(endpoint: str, img: ImageBuffer, scale: float,
                   timeout: float = 600.0) -> ImageBuffer:
    """Send an image to an upscaling backend and verify the returned dimensions."""
    if scale <= 0:
        raise ConfigError(f"scale must be > 0, got {scale!r}")
    want_w = math.ceil(img.width * scale)
    want_h = math.ceil(img.height * scale)
    if endpoint == "mock":
        out = upscale_nearest(img, int(scale)) if float(scale).is_integer() \
            else upscale_lanczos(img, scale)
    else:
        out = _post_image(
            endpoint.rstrip("/") + "/upscale",
            {"png_b64": base64.b64encode(encode_png(img)).decode(), "scale": scale},
            timeout,
        )
    if out.width != want_w or out.height != want_h:
        raise ImageDimensionMismatch(
            f"backend returned {out.width}x{out.height}, wanted {want_w}x{want_h}"
        )
    return out


@dataclass
class PipelineConfig:
    method: str  # template | llm | rag_multishot
    store_path: str
    output_dir: str
    seed: int = 0
    base: str = ""
    llm_url: str | None = None
    generator_url: str = "mock"
    upscaler: str = "nearest"  # nearest | lanczos | remote:<url> | mock
    scale: float = 4.0
    size: int = 1024
    product: str | None = None
    period: int = 8

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from exc
        try:
            return cls(
                method=raw["method"],
                store_path=raw["store"],
                output_dir=raw["output_dir"],
                seed=int(raw.get("seed", 0)),
                base=raw.get("base", ""),
                llm_url=raw.get("llm_url") or os.environ.get("ARTPRESS_LLM_URL"),
                generator_url=raw.get("generator_url")
                or os.environ.get("ARTPRESS_GEN_URL", "mock"),
                upscaler=raw.get("upscaler", "nearest"),
                scale=float(raw.get("scale", 4.0)),
                size=int(raw.get("size", 1024)),
                product=raw.get("product"),
                period=int(raw.get("period", 8)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad pipeline config: {exc}") from exc


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def apply_upscaler(name: str, img: ImageBuffer, scale: float) -> ImageBuffer:
    if name == "nearest":
        if not float(scale).is_integer():
            raise ConfigError("nearest upscaler needs an integer scale")
        return upscale_nearest(img, int(scale))
    if name == "lanczos":
        return upscale_lanczos(img, scale)
    if name == "mock" or name.startswith("remote:"):
        endpoint = "mock" if name == "mock" else name[len("remote:"):]
        return upscale_remote(endpoint, img, scale)
    raise ConfigError(f"unknown upscaler {name!r}")


def run_pipeline(cfg: PipelineConfig, chat_backend=None) -> dict:
    """Execute the full flow and write all artifacts plus manifest.json.

    Stage seeds derive from the run seed by fixed offsets (enhance +0,
    generate +1) so a single seed reproduces the whole run.
    """
    if not cfg.base.strip():
        raise ConfigError("no base prompt configured")
    if not os.path.exists(cfg.store_path):
        raise ConfigError(f"store file not found: {cfg.store_path}")
    store = ragstore.ingest(cfg.store_path)

    if chat_backend is None:
        if cfg.llm_url == "mock":
            chat_backend = EchoChatBackend()
        elif cfg.llm_url:
            chat_backend = enhance.HttpChatBackend(cfg.llm_url)

    os.makedirs(cfg.output_dir, exist_ok=True)
    manifest = {
        "base": cfg.base,
        "method": cfg.method,
        "seed": cfg.seed,
        "stage_seeds": {"enhance": cfg.seed, "generate": cfg.seed + 1},
        "stages": {},
        "artifacts": {},
    }

    def fail(stage, exc):
        manifest["error"] = {"stage": stage, "cause": str(exc)}
        _write_manifest(cfg.output_dir, manifest)
        raise exc

    # enhance
    t0 = time.perf_counter()
    try:
        if cfg.method == "template":
            pair = enhance.enhance_template(cfg.base, store, cfg.seed)
        elif cfg.method == "llm":
            if chat_backend is None:
                raise ConfigError("llm method needs an LLM endpoint")
            pair = enhance.enhance_llm(cfg.base, chat_backend)
        elif cfg.method in ("rag_multishot", "rag-multishot"):
            if chat_backend is None:
                raise ConfigError("rag_multishot method needs an LLM endpoint")
            pair = enhance.enhance_multishot(cfg.base, store, chat_backend)
        else:
            raise ConfigError(f"unknown method {cfg.method!r}")
    except Exception as exc:  # noqa: BLE001
        fail("enhance", exc)
    manifest["stages"]["enhance"] = {"seconds": time.perf_counter() - t0}
    pair_path = os.path.join(cfg.output_dir, "pair.json")
    pair_bytes = (json.dumps(pair.to_json_dict(), indent=2) + "\n").encode()
    with open(pair_path, "wb") as fh:
        fh.write(pair_bytes)
    manifest["artifacts"]["pair"] = {"path": "pair.json"}

    # generate
    t0 = time.perf_counter()
    try:
        gen_req = GenerateRequest(pair.positive, pair.negative,
                                  cfg.size, cfg.size, cfg.seed + 1)
        generated = generate_remote(cfg.generator_url, gen_req)
    except Exception as exc:  # noqa: BLE001
        fail("generate", exc)
    manifest["stages"]["generate"] = {"seconds": time.perf_counter() - t0}
    gen_bytes = encode_png(generated)
    gen_path = os.path.join(cfg.output_dir, "generated.png")
    with open(gen_path, "wb") as fh:
        fh.write(gen_bytes)
    manifest["artifacts"]["generated"] = {
        "path": "generated.png",
        "sha256": _sha256(gen_bytes),
        "width": generated.width,
        "height": generated.height,
    }

    # upscale
    t0 = time.perf_counter()
    try:
        upscaled = apply_upscaler(cfg.upscaler, generated, cfg.scale)
    except Exception as exc:  # noqa: BLE001
        fail("upscale", exc)
    manifest["stages"]["upscale"] = {"seconds": time.perf_counter() - t0}
    up_bytes = encode_png(upscaled)
    up_path = os.path.join(cfg.output_dir, "upscaled.png")
    with open(up_path, "wb") as fh:
        fh.write(up_bytes)
    manifest["artifacts"]["upscaled"] = {
        "path": "upscaled.png",
        "sha256": _sha256(up_bytes),
        "width": upscaled.width,
        "height": upscaled.height,
    }

    # metrics
    t0 = time.perf_counter()
    try:
        scores = quality.score(upscaled, cfg.period)
    except Exception as exc:  # noqa: BLE001
        fail("metrics", exc)
    manifest["stages"]["metrics"] = {"seconds": time.perf_counter() - t0}
    metrics = {"blurriness": scores.blurriness, "pixelation": scores.pixelation}
    with open(os.path.join(cfg.output_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2)
        fh.write("\n")
    manifest["artifacts"]["metrics"] = {"path": "metrics.json"}
    manifest["metrics"] = metrics

    # validate
    if cfg.product:
        spec = product_spec(cfg.product)
        verdict = validate_for_product(upscaled, spec)
        manifest["verdict"] = {
            "product": spec.name,
            "ok": verdict.ok,
            "required_extra_scale": verdict.required_extra_scale,
        }
    else:
        manifest["verdict"] = {"product": None, "ok": True, "required_extra_scale": None}

    _write_manifest(cfg.output_dir, manifest)
    return manifest


def _write_manifest(output_dir, manifest):
    with open(os.path.join(output_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
