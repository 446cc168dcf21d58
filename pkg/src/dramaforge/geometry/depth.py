"""Depth map value object."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DepthMap:
    values: np.ndarray  # HxW float, scene units (euclidean ray length)
    valid: np.ndarray  # HxW bool

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "valid", np.asarray(self.valid, dtype=bool))
        if self.values.shape != self.valid.shape:
            raise ValueError("depth/valid shape mismatch")

    def check(self) -> None:
        vals = self.values[self.valid]
        if vals.size and (not np.all(np.isfinite(vals)) or np.any(vals <= 0)):
            raise ValueError("valid depths must be finite and positive")

    @property
    def valid_fraction(self) -> float:
        return float(self.valid.mean()) if self.valid.size else 0.0
