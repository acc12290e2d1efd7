"""Binary embedding codes: a vector and its assigned word's vector are split
into L equal segments; bit i is 1 iff the vector's segment mean is >= the
word's segment mean. Codes are packed little-endian (bit i of the code is bit
i mod 8 of byte i div 8) and compared by Hamming distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EmbedConfig:
    code_length: int  # L bits

    def __post_init__(self):
        if self.code_length < 1:
            raise ValueError("code_length must be >= 1")


def code_bytes(code_length: int) -> int:
    return (code_length + 7) // 8


def segment_means(x: np.ndarray, code_length: int) -> np.ndarray:
    """Means of the L contiguous equal-length segments of each row.

    Accepts a vector (D,) or matrix (N, D); D must be divisible by L.
    """
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1]
    if d % code_length != 0:
        raise ValueError(f"dimension {d} not divisible by code length {code_length}")
    return x.reshape(*x.shape[:-1], code_length, d // code_length).mean(axis=-1)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack boolean bit rows into uint8 codes; trailing pad bits are zero."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=-1, bitorder="little")


def encode(x, c, cfg: EmbedConfig) -> np.ndarray:
    """L-bit code of x relative to reference vector c, packed uint8."""
    x = np.asarray(x)
    c = np.asarray(c)
    if x.shape != c.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {c.shape}")
    bits = segment_means(x, cfg.code_length) >= segment_means(c, cfg.code_length)
    return pack_bits(bits)


def encode_from_means(x_means: np.ndarray, c_means: np.ndarray) -> np.ndarray:
    """Codes from precomputed segment means (rows broadcast against rows)."""
    return pack_bits(x_means >= c_means)


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    """Number of differing bits between two packed codes."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"code length mismatch: {a.shape} vs {b.shape}")
    return int(np.bitwise_count(a ^ b).sum())


def hamming_to_many(code: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Hamming distances from one packed code to each row of a code matrix."""
    if codes.shape[-1] != code.shape[-1]:
        raise ValueError(f"code length mismatch: {codes.shape} vs {code.shape}")
    return np.bitwise_count(codes ^ code).sum(axis=-1, dtype=np.int64)
