"""Compositional feature transform: L2 normalisation, affine shift, Tukey power.

All functions accept a single vector or a ``(m, n)`` matrix of row vectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "TransformParams",
    "IDENTITY",
    "DEFAULT_GRID",
    "l2_normalize",
    "linear",
    "tukey",
    "apply",
    "parse_transform",
]


@dataclass(frozen=True)
class TransformParams:
    w: float = 1.0
    b: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if self.w == 0 or not np.isfinite(self.w):
            raise ValueError(f"scale w must be finite and nonzero, got {self.w}")
        if not (np.isfinite(self.b) and np.isfinite(self.lam)):
            raise ValueError("shift and exponent must be finite")

    def to_dict(self) -> dict:
        return {"w": self.w, "b": self.b, "lambda": self.lam}

    def label(self) -> str:
        return f"w={self.w:g},b={self.b:g},lambda={self.lam:g}"


IDENTITY = TransformParams()

# 2 exponents x 4 shifts; the validation-selected pairs are dataset specific.
DEFAULT_GRID = tuple(
    TransformParams(1.0, b, lam) for lam in (1.0, 0.5) for b in (0.0, 0.02, 0.04, 0.08)
)


def parse_transform(obj) -> TransformParams:
    """Build params from a mapping with keys ``w``, ``b`` and ``lambda`` (or ``lam``)."""
    if isinstance(obj, TransformParams):
        return obj
    lam = obj.get("lambda", obj.get("lam", 1.0))
    return TransformParams(float(obj.get("w", 1.0)), float(obj.get("b", 0.0)), float(lam))


def l2_normalize(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DomainError("cannot normalise a zero vector", stage="l2_normalize")
    return z / norm


def linear(z, w: float, b: float) -> np.ndarray:
    return w * np.asarray(z, dtype=np.float64) + b


def _is_integer(lam: float) -> bool:
    return float(lam).is_integer()


def tukey(z, lam: float) -> np.ndarray:
    """Elementwise ``z ** lam``, or ``log(z)`` when ``lam == 0``.

    Nonpositive entries are only accepted for nonzero integer exponents.
    """
    z = np.asarray(z, dtype=np.float64)
    if lam == 1.0:
        return z.copy()
    if lam == 0.0 or not _is_integer(lam):
        if np.any(z <= 0):
            raise DomainError(
                f"exponent {lam:g} needs strictly positive entries", stage="tukey")
    elif lam < 0 and np.any(z == 0):
        raise DomainError(f"exponent {lam:g} is singular at zero", stage="tukey")
    if lam == 0.0:
        return np.log(z)
    if lam == 0.5:
        return np.sqrt(z)
    return np.power(z, lam)


def apply(params: TransformParams, z) -> np.ndarray:
    """``tukey(linear(l2_normalize(z), w, b), lambda)``."""
    return tukey(linear(l2_normalize(z), params.w, params.b), params.lam)
