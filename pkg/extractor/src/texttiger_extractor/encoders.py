"""Encoders that turn images or captions into feature rows.

Three families:

- ``seeded-projection``: a deterministic stand-in with no pretrained
  weights. Images are resized and flattened, captions hashed into byte
  bigrams, then both are pushed through fixed-seed random projections (and
  a softmax for label distributions). It exists so the extraction pipeline
  and its file contract can run and be tested fully offline.
- ``inception-v3``: torchvision's ImageNet classifier; softmaxed logits for
  label distributions, the 2048-wide pool for FID features.
- ``clip-*``: any CLIP checkpoint loadable by transformers; image and text
  embeddings from the joint encoder.

The pretrained families need their packages installed and weights
obtainable; constructing one raises a clear error otherwise.
"""

from __future__ import annotations

import zlib

import numpy as np
from PIL import Image

IMAGE_KINDS = ("label_dist", "pool_features", "clip_img")
TEXT_KINDS = ("clip_txt",)
ALL_KINDS = IMAGE_KINDS + TEXT_KINDS


def _softmax(rows: np.ndarray) -> np.ndarray:
    shifted = rows - rows.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class SeededProjectionEncoder:
    """Deterministic weightless encoder (fixed-seed random projections)."""

    widths = {"label_dist": 1000, "pool_features": 2048, "clip_img": 768, "clip_txt": 768}

    image_size = 64
    text_buckets = 4096

    def __init__(self, name: str = "seeded-projection"):
        self.name = name
        self._seed = zlib.crc32(name.encode("utf-8"))
        self._projections: dict[str, np.ndarray] = {}

    def preprocess_description(self, kind: str) -> str:
        if kind in (*IMAGE_KINDS,):
            return f"RGB, bilinear resize {self.image_size}x{self.image_size}, scale to [0,1]"
        return f"utf-8 byte bigrams hashed into {self.text_buckets} buckets, l2-normalized"

    def width(self, kind: str) -> int:
        return self.widths[kind]

    def _projection(self, in_dim: int, kind: str) -> np.ndarray:
        cached = self._projections.get(kind)
        if cached is None:
            rng = np.random.default_rng([self._seed, zlib.crc32(kind.encode("utf-8"))])
            cached = rng.standard_normal((in_dim, self.widths[kind])).astype(np.float32)
            cached /= np.sqrt(in_dim, dtype=np.float32)
            self._projections[kind] = cached
        return cached

    def _pixels(self, path) -> np.ndarray:
        with Image.open(path) as img:
            rgb = img.convert("RGB").resize(
                (self.image_size, self.image_size), Image.BILINEAR
            )
        return np.asarray(rgb, dtype=np.float32).reshape(-1) / 255.0

    def encode_images(self, paths, kind: str, batch_size: int = 16) -> np.ndarray:
        # one matvec per image: a row never depends on its batch siblings,
        # so any batching produces bit-identical rows
        vectors = [self._pixels(p) for p in paths]
        projection = self._projection(vectors[0].shape[0], kind)
        features = np.stack([v @ projection for v in vectors])
        if kind == "label_dist":
            features = _softmax(features)
        return features.astype(np.float32)

    def _text_vector(self, text: str) -> np.ndarray:
        data = text.encode("utf-8")
        histogram = np.zeros(self.text_buckets, dtype=np.float32)
        for first, second in zip(data, data[1:]):
            histogram[(first * 256 + second) % self.text_buckets] += 1.0
        if not data:
            return histogram
        norm = np.linalg.norm(histogram)
        return histogram / norm if norm else histogram

    def encode_texts(self, lines, batch_size: int = 16) -> np.ndarray:
        projection = self._projection(self.text_buckets, "clip_txt")
        return np.stack([self._text_vector(line) @ projection for line in lines]).astype(
            np.float32
        )


class InceptionV3Encoder:
    """torchvision inception_v3: label distributions and pooled features."""

    widths = {"label_dist": 1000, "pool_features": 2048}

    def __init__(self, name: str = "inception-v3"):
        self.name = name
        try:
            import torch
            from torchvision.models import Inception_V3_Weights, inception_v3
        except ImportError as exc:
            raise RuntimeError(f"{name} needs torch and torchvision installed") from exc
        self._torch = torch
        try:
            weights = Inception_V3_Weights.IMAGENET1K_V1
            self._transform = weights.transforms()
            self._classifier = inception_v3(weights=weights).eval()
            self._pool = inception_v3(weights=weights).eval()
        except Exception as exc:
            raise RuntimeError(
                f"{name} weights not obtainable in this environment: {exc}"
            ) from exc
        self._pool.fc = torch.nn.Identity()

    def preprocess_description(self, kind: str) -> str:
        return "torchvision Inception_V3_Weights.IMAGENET1K_V1 evaluation transform"

    def width(self, kind: str) -> int:
        return self.widths[kind]

    def encode_images(self, paths, kind: str, batch_size: int = 16) -> np.ndarray:
        torch = self._torch
        model = self._classifier if kind == "label_dist" else self._pool
        rows = []
        for start in range(0, len(paths), batch_size):
            batch_paths = paths[start : start + batch_size]
            batch = torch.stack(
                [self._transform(Image.open(p).convert("RGB")) for p in batch_paths]
            )
            with torch.no_grad():
                out = model(batch)
            if kind == "label_dist":
                out = torch.softmax(out, dim=1)
            rows.append(out.cpu().numpy())
        return np.vstack(rows).astype(np.float32)

    def encode_texts(self, lines, batch_size: int = 16) -> np.ndarray:
        raise ValueError(f"{self.name} has no text tower")


class ClipEncoder:
    """A CLIP checkpoint via transformers: image and text embeddings."""

    def __init__(self, name: str):
        self.name = name
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise RuntimeError(f"{name} needs torch and transformers installed") from exc
        self._torch = torch
        try:
            self._model = CLIPModel.from_pretrained(name).eval()
            self._processor = CLIPProcessor.from_pretrained(name)
        except Exception as exc:
            raise RuntimeError(
                f"{name} weights not obtainable in this environment: {exc}"
            ) from exc
        self._width = int(self._model.config.projection_dim)

    def preprocess_description(self, kind: str) -> str:
        return f"transformers CLIPProcessor for {self.name}"

    def width(self, kind: str) -> int:
        return self._width

    def encode_images(self, paths, kind: str, batch_size: int = 16) -> np.ndarray:
        torch = self._torch
        rows = []
        for start in range(0, len(paths), batch_size):
            images = [Image.open(p).convert("RGB") for p in paths[start : start + batch_size]]
            inputs = self._processor(images=images, return_tensors="pt")
            with torch.no_grad():
                out = self._model.get_image_features(**inputs)
            rows.append(out.cpu().numpy())
        return np.vstack(rows).astype(np.float32)

    def encode_texts(self, lines, batch_size: int = 16) -> np.ndarray:
        torch = self._torch
        rows = []
        for start in range(0, len(lines), batch_size):
            inputs = self._processor(
                text=list(lines[start : start + batch_size]),
                return_tensors="pt",
                padding=True,
                truncation=True,
            )
            with torch.no_grad():
                out = self._model.get_text_features(**inputs)
            rows.append(out.cpu().numpy())
        return np.vstack(rows).astype(np.float32)


def get_encoder(model: str):
    """Resolve a model identifier to an encoder instance."""
    if model == "seeded-projection":
        return SeededProjectionEncoder()
    if model == "inception-v3":
        return InceptionV3Encoder()
    if "clip" in model.lower():
        return ClipEncoder(model)
    raise ValueError(
        f"unknown model {model!r}; expected seeded-projection, inception-v3, or a clip-* id"
    )
