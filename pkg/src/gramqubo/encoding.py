"""Symmetric signed fixed-point encoding between bit vectors and update vectors.

Each continuous update component is represented by K bits through a shared
precision vector p with p_k = delta_max * 2^k / (2^K - 1).  A bit pattern b
decodes to u_j = p . (2 b_j - 1), so every component lies in
[-delta_max, +delta_max], all-zeros maps to -delta_max and all-ones to
+delta_max.  Zero itself is not representable; the closest magnitudes are
+/- p_0.

Bit vectors are plain uint8/int arrays of length n_params * K, grouped K
bits per parameter with the least significant bit first.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PrecisionVector:
    """Shared per-parameter bit weights for the signed encoding."""

    bits: int
    delta_max: float
    p: np.ndarray

    @property
    def resolution(self) -> float:
        """Smallest representable magnitude, p_0 = delta_max / (2^K - 1)."""
        return float(self.p[0])


def precision_vector(bits: int, delta_max: float) -> PrecisionVector:
    """Build the powers-of-two precision vector for K bits.

    The closed form p_k = delta_max * 2^k / (2^K - 1) is used directly
    (rather than repeated doubling) so the telescoping identity
    sum(p) == delta_max holds to machine precision even at K = 20.
    """
    if bits < 1:
        raise ValueError(f"bit precision must be >= 1, got {bits}")
    if delta_max <= 0:
        raise ValueError(f"delta_max must be positive, got {delta_max}")
    k = np.arange(bits, dtype=np.float64)
    p = delta_max * np.exp2(k) / (2.0**bits - 1.0)
    return PrecisionVector(bits=bits, delta_max=float(delta_max), p=p)


def decode(bits: np.ndarray, p: PrecisionVector) -> np.ndarray:
    """Decode a grouped bit vector into a continuous update vector.

    ``bits`` holds K bits per parameter (LSB first); the result has
    length ``len(bits) // K`` with every entry in [-delta_max, delta_max].
    """
    bits = np.asarray(bits)
    if bits.size % p.bits != 0:
        raise ValueError(
            f"bit vector length {bits.size} is not a multiple of K={p.bits}"
        )
    grouped = bits.reshape(-1, p.bits).astype(np.float64)
    return (2.0 * grouped - 1.0) @ p.p


def min_magnitude(p: PrecisionVector) -> float:
    """Magnitude of the representable value closest to zero."""
    return p.resolution
