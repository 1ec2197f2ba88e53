"""Lookup-table export: decoder outputs for every possible codeword.

After export the receiver side needs zero network computation: the feedback
codeword indexes a table row of beam phases. Row order packs codeword element
k as base-2^bits digit k (element 0 least significant).
"""

from __future__ import annotations

import os
import struct

import numpy as np

from . import nncore as nn

LUT_MAGIC = b"CSFL"
LUT_VERSION = 1
MAX_LUT_BITS = 20

_LUT_HEADER = struct.Struct("<4sHHI")  # magic, version, n_bits, n_t


class LutFormatError(ValueError):
    """Raised when a lookup-table file does not match the expected layout."""


def codeword_to_row(codeword, bits: int) -> np.ndarray:
    """Flat row index of one or more codeword index vectors."""
    cw = np.atleast_2d(np.asarray(codeword, dtype=np.int64))
    weights = np.left_shift(1, bits * np.arange(cw.shape[1], dtype=np.int64))
    rows = cw @ weights
    return rows if np.asarray(codeword).ndim > 1 else rows[0]


def row_to_codeword(rows, n_elements: int, bits: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    shifts = bits * np.arange(n_elements, dtype=np.int64)
    mask = (1 << bits) - 1
    return (rows[..., None] >> shifts) & mask


def build_lut(decoder: nn.Mlp, quant: nn.QuantizerSpec, n_elements: int,
              chunk_rows: int = 65536) -> np.ndarray:
    """Enumerate all codewords through the decoder; rows of float32 phases."""
    n_bits = quant.bits * n_elements
    if n_bits > MAX_LUT_BITS:
        raise ValueError(f"{n_bits} feedback bits exceed the {MAX_LUT_BITS}-bit table cap")
    if decoder.in_dim != n_elements:
        raise ValueError(f"decoder expects {decoder.in_dim} inputs, codeword has {n_elements}")
    n_rows = 1 << n_bits
    phases = np.empty((n_rows, decoder.out_dim), dtype=np.float32)
    for start in range(0, n_rows, chunk_rows):
        rows = np.arange(start, min(start + chunk_rows, n_rows), dtype=np.int64)
        cw = row_to_codeword(rows, n_elements, quant.bits)
        q = nn.dequantize(cw, quant, dtype=np.float32)
        theta, _ = nn.mlp_forward(decoder, q)
        phases[start:start + len(rows)] = theta.astype(np.float32, copy=False)
    return phases


def write_lut(path: str, phases: np.ndarray, n_bits: int) -> None:
    n_rows, n_t = phases.shape
    if n_rows != 1 << n_bits:
        raise ValueError(f"table has {n_rows} rows, expected 2^{n_bits}")
    header = _LUT_HEADER.pack(LUT_MAGIC, LUT_VERSION, n_bits, n_t)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(phases, dtype="<f4").tobytes())
    os.replace(tmp, path)


def read_lut(path: str):
    """Returns (n_bits, phases) with phases shaped (2^n_bits, n_t)."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _LUT_HEADER.size:
        raise LutFormatError(f"{path}: truncated header")
    magic, version, n_bits, n_t = _LUT_HEADER.unpack_from(raw)
    if magic != LUT_MAGIC:
        raise LutFormatError(f"{path}: bad magic {magic!r}")
    if version != LUT_VERSION:
        raise LutFormatError(f"{path}: unsupported version {version}")
    expected = _LUT_HEADER.size + (1 << n_bits) * n_t * 4
    if len(raw) != expected:
        raise LutFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    phases = np.frombuffer(raw, dtype="<f4", offset=_LUT_HEADER.size)
    return n_bits, phases.reshape(1 << n_bits, n_t).copy()


def lut_beam(phases: np.ndarray, codeword, bits: int) -> np.ndarray:
    """Beam vector(s) for codeword index vector(s) via table lookup."""
    rows = codeword_to_row(codeword, bits)
    return nn.phase_to_unit(phases[rows])
