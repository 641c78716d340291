"""Deterministic text embedder: hashed character-trigram bag, 64 dims.

A stand-in for a pretrained text encoder with the same interface. Near
duplicate phrasings share most trigrams so their cosines are high, and the
embedding is stable across processes (crc32, not Python's salted hash).
Any object with ``embedder_id``, ``dim`` and ``embed`` can be plugged in
instead.
"""

from __future__ import annotations

import re
import zlib

import numpy as np

EMBED_DIM = 64


class TrigramTextEmbedder:
    embedder_id = "char-trigram-64-v1"
    dim = EMBED_DIM

    def embed(self, text: str) -> np.ndarray:
        """Unit-norm float32 vector; rejects empty/whitespace-only text."""
        cleaned = re.sub(r"\s+", " ", text.strip().lower())
        if not cleaned:
            raise ValueError("cannot embed empty text")
        padded = f" {cleaned} "
        counts = np.zeros(self.dim, dtype=np.float64)
        for i in range(len(padded) - 2):
            tri = padded[i : i + 3]
            counts[zlib.crc32(tri.encode("utf-8")) % self.dim] += 1.0
        norm = float(np.linalg.norm(counts))
        return (counts / norm).astype(np.float32)
