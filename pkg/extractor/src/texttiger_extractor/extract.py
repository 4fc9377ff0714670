"""Run an encoder over images or captions and serialize the rows as TFV1.

Output layout matches the evaluation toolchain's feature-file contract:
magic ``TFV1``, u32 little-endian row and column counts, row-major float32,
plus a JSON sidecar describing what the rows are. Row order is the sorted
input filename order (or caption line order), never scheduling order, and
extraction is deterministic, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import ALL_KINDS, IMAGE_KINDS, get_encoder

logger = logging.getLogger("texttiger_extractor")

MAGIC = b"TFV1"
_HEADER = struct.Struct("<4sII")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


@dataclass(frozen=True)
class ExtractionJob:
    """One extraction: what to encode, with which model, into which file."""

    kind: str
    inputs: str
    model: str
    out: str
    batch_size: int = 16

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {ALL_KINDS}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


def write_tfv1(path, array: np.ndarray) -> Path:
    x = np.ascontiguousarray(array, dtype="<f4")
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, x.shape[0], x.shape[1]))
        f.write(x.tobytes())
    return path


def _gather_images(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise ValueError(f"{directory} is not a directory of images")
    return sorted(
        (p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.name,
    )


def _gather_captions(path: Path) -> list[str]:
    if not path.is_file():
        raise ValueError(f"{path} is not a caption file")
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]


def run_extraction(job: ExtractionJob) -> Path:
    """Encode the inputs and write the feature file plus its sidecar.

    Unreadable images are skipped with a warning and recorded in the
    sidecar. An empty input set (or one where everything was skipped) is an
    error.
    """
    encoder = get_encoder(job.model)
    inputs = Path(job.inputs)
    skipped: list[str] = []

    if job.kind in IMAGE_KINDS:
        candidates = _gather_images(inputs)
        usable = []
        for path in candidates:
            try:
                from PIL import Image

                with Image.open(path) as img:
                    img.verify()
                usable.append(path)
            except Exception as exc:
                logger.warning("skipping unreadable image %s: %s", path.name, exc)
                skipped.append(path.name)
        if not usable:
            raise ValueError(f"no readable images under {inputs}")
        rows = encoder.encode_images(usable, job.kind, batch_size=job.batch_size)
        source_count = len(usable)
    else:
        captions = _gather_captions(inputs)
        if not captions:
            raise ValueError(f"no captions in {inputs}")
        rows = encoder.encode_texts(captions, batch_size=job.batch_size)
        source_count = len(captions)

    assert rows.shape[0] == source_count
    out = write_tfv1(job.out, rows)
    sidecar = {
        "kind": job.kind,
        "source": str(inputs),
        "model": job.model,
        "created": None,
        "preprocess": encoder.preprocess_description(job.kind),
        "skipped": skipped,
    }
    with open(str(out) + ".json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f, sort_keys=True, indent=2)
        f.write("\n")
    return out


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="texttiger-extract",
        description="Encode images or captions into a TFV1 feature file.",
    )
    parser.add_argument("--kind", required=True, choices=ALL_KINDS)
    parser.add_argument("--in", dest="inputs", required=True,
                        help="image directory, or caption file for clip_txt")
    parser.add_argument("--out", required=True, help="feature file to write")
    parser.add_argument("--model", default="seeded-projection",
                        help="seeded-projection, inception-v3, or a clip-* id")
    parser.add_argument("--batch-size", type=int, default=16)
    args = parser.parse_args(argv)
    job = ExtractionJob(
        kind=args.kind,
        inputs=args.inputs,
        model=args.model,
        out=args.out,
        batch_size=args.batch_size,
    )
    try:
        out = run_extraction(job)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{job.kind}: {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
