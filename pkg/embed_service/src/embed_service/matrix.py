"""Binary matrix payload: one JSON header line, then little-endian float32 rows.

This is the wire/file format the soundtrack evaluator consumes; keep the
header keys (``d``, ``n``, ``segment_span_s``, ``source_tag``, ``kind``)
exactly as they are.
"""

from __future__ import annotations

import json

import numpy as np


def matrix_payload(
    rows: np.ndarray, segment_span_s: float, source_tag: str, kind: str
) -> bytes:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
    header = {
        "d": int(rows.shape[1]),
        "n": int(rows.shape[0]),
        "segment_span_s": float(segment_span_s),
        "source_tag": source_tag,
        "kind": kind,
    }
    return json.dumps(header).encode("utf-8") + b"\n" + rows.astype("<f4").tobytes()


def parse_matrix_payload(data: bytes) -> tuple[dict, np.ndarray]:
    """Inverse of :func:`matrix_payload`; used by our own tests and tools."""
    head, _, body = data.partition(b"\n")
    header = json.loads(head.decode("utf-8"))
    n, d = int(header["n"]), int(header["d"])
    if len(body) != n * d * 4:
        raise ValueError(f"expected {n * d * 4} payload bytes, found {len(body)}")
    return header, np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(n, d)
