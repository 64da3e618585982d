from __future__ import annotations

import numpy as np


def rmse(pred, exp) -> float:
    """Root-mean-square difference of two equal-length, non-empty sequences."""
    pred = np.asarray(pred, dtype=float)
    exp = np.asarray(exp, dtype=float)
    if pred.shape != exp.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {exp.shape}")
    if pred.size == 0:
        raise ValueError("rmse of an empty sequence")
    return float(np.sqrt(np.mean((pred - exp) ** 2)))
