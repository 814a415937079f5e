import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from artpress.imaging import ImageBuffer


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_image(rng, w, h):
    return ImageBuffer(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


@pytest.fixture
def sample_store_file(tmp_path):
    path = tmp_path / "store.jsonl"
    write_jsonl(path, [
        {"id": "pe1", "text": "a majestic cat sitting on a throne", "kind": "positive_example"},
        {"id": "pe2", "text": "sunset over snowy mountains, golden hour", "kind": "positive_example"},
        {"id": "ne1", "text": "watermark, text, low quality", "kind": "negative_example"},
        {"id": "ne2", "text": "blurry, jpeg artifacts, cropped", "kind": "negative_example"},
        {"id": "pt1", "text": "oil painting of {base}, dramatic lighting", "kind": "positive_template"},
        {"id": "pt2", "text": "photo of {base}, 8k, sharp focus", "kind": "positive_template"},
        {"id": "nt1", "text": "blurry, watermark", "kind": "negative_template"},
        {"id": "nt2", "text": "low quality, {base} distorted", "kind": "negative_template"},
    ])
    return path
