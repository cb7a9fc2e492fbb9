"""Masked scaled-dot-product attention with gradient verification.

Weights are the row-softmax of Q K^T / sqrt(d) taken over the unmasked
columns only: masked entries are excluded from the normalising sum, so
their weights are exactly zero rather than merely tiny.  Double precision
throughout; this is a reference kernel, not a training kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import jit_kernel

__all__ = ["AttentionInputs", "masked_attention", "attention_gradients", "gradient_check"]


@dataclass(frozen=True)
class AttentionInputs:
    """Queries (n, d), keys (m, d), values (m, v) and a binary mask (n, m)."""

    queries: np.ndarray
    keys: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.queries, dtype=np.float64)
        k = np.asarray(self.keys, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        m = np.asarray(self.mask)
        if q.ndim != 2 or k.ndim != 2 or v.ndim != 2 or m.ndim != 2:
            raise ValueError("queries, keys, values and mask must all be matrices")
        if k.shape[1] != q.shape[1]:
            raise ValueError(f"key width {k.shape[1]} != query width {q.shape[1]}")
        if v.shape[0] != k.shape[0]:
            raise ValueError(f"value rows {v.shape[0]} != key rows {k.shape[0]}")
        if m.shape != (q.shape[0], k.shape[0]):
            raise ValueError(f"mask shape {m.shape} != ({q.shape[0]}, {k.shape[0]})")
        if not (np.isfinite(q).all() and np.isfinite(k).all() and np.isfinite(v).all()):
            raise ValueError("attention inputs must be finite")
        mask = (m != 0).astype(np.uint8)
        if mask.shape[0] and not mask.any(axis=1).all():
            bad = int(np.flatnonzero(~mask.any(axis=1))[0])
            raise ValueError(f"mask row {bad} is empty; softmax would be undefined")
        object.__setattr__(self, "queries", q)
        object.__setattr__(self, "keys", k)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", mask)


def _attention_loops(q, k, v, mask):
    n, d = q.shape
    m = k.shape[0]
    width = v.shape[1]
    scale = 1.0 / np.sqrt(d)
    weights = np.zeros((n, m), dtype=np.float64)
    out = np.zeros((n, width), dtype=np.float64)
    scores = np.empty(m, dtype=np.float64)
    for i in range(n):
        top = -np.inf
        for j in range(m):
            if mask[i, j]:
                s = 0.0
                for t in range(d):
                    s += q[i, t] * k[j, t]
                s *= scale
                scores[j] = s
                if s > top:
                    top = s
        z = 0.0
        for j in range(m):
            if mask[i, j]:
                e = np.exp(scores[j] - top)
                weights[i, j] = e
                z += e
        for j in range(m):
            if mask[i, j]:
                w = weights[i, j] / z
                weights[i, j] = w
                for t in range(width):
                    out[i, t] += w * v[j, t]
    return out, weights


_attention_kernel = jit_kernel(_attention_loops)


def _attention_numpy(q, k, v, mask):
    scale = 1.0 / np.sqrt(q.shape[1])
    scores = (q @ k.T) * scale
    kept = np.where(mask.astype(bool), scores, -np.inf)
    top = kept.max(axis=1, keepdims=True)
    expd = np.exp(kept - top)  # exp(-inf) is exactly 0: masked weights vanish
    weights = expd / expd.sum(axis=1, keepdims=True)
    return weights @ v, weights


def masked_attention(inputs: AttentionInputs) -> tuple[np.ndarray, np.ndarray]:
    """Returns (output (n, v), weights (n, m)); masked weights are exactly 0."""
    q, k, v, mask = inputs.queries, inputs.keys, inputs.values, inputs.mask
    if q.shape[0] == 0:
        return np.zeros((0, v.shape[1])), np.zeros((0, k.shape[0]))
    if _attention_kernel is not None:
        return _attention_kernel(q, k, v, mask)
    return _attention_numpy(q, k, v, mask)


def attention_gradients(
    inputs: AttentionInputs, d_out: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of a scalar loss w.r.t. Q, K, V.

    The default loss is the sum of all output entries (d_out of ones).
    Softmax backward per row: dS = W * (dW - sum_j dW_j W_j), restricted
    to unmasked columns, which the W factor enforces on its own.
    """
    q, k, v = inputs.queries, inputs.keys, inputs.values
    out, weights = masked_attention(inputs)
    if d_out is None:
        d_out = np.ones_like(out)
    d_weights = d_out @ v.T
    d_values = weights.T @ d_out
    inner = (d_weights * weights).sum(axis=1, keepdims=True)
    d_scores = weights * (d_weights - inner)
    scale = 1.0 / np.sqrt(q.shape[1])
    d_queries = d_scores @ k * scale
    d_keys = d_scores.T @ q * scale
    return d_queries, d_keys, d_values


def gradient_check(inputs: AttentionInputs, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients."""
    analytic = attention_gradients(inputs)
    worst = 0.0
    arrays = (inputs.queries, inputs.keys, inputs.values)
    for which, (arr, grad) in enumerate(zip(arrays, analytic)):
        numeric = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            perturbed = [a.copy() for a in arrays]
            perturbed[which][idx] = arr[idx] + step
            plus = masked_attention(
                AttentionInputs(*perturbed, inputs.mask)
            )[0].sum()
            perturbed[which][idx] = arr[idx] - step
            minus = masked_attention(
                AttentionInputs(*perturbed, inputs.mask)
            )[0].sum()
            numeric[idx] = (plus - minus) / (2.0 * step)
        denom = np.maximum(np.maximum(np.abs(grad), np.abs(numeric)), 1e-8)
        worst = max(worst, float((np.abs(grad - numeric) / denom).max()))
    return worst
