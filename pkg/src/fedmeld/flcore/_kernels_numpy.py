"""Vectorized loss/gradient kernels (reference backend)."""

from __future__ import annotations

import numpy as np


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def logistic_loss_grad(
    w: np.ndarray, X: np.ndarray, y: np.ndarray, num_labels: int, l2: float
) -> tuple[float, np.ndarray]:
    """Multinomial logistic regression with bias and an l2 term.

    Parameter layout: row-major (num_labels, d+1), bias last per class.
    """
    n, d = X.shape
    W = w.reshape(num_labels, d + 1)
    logits = X @ W[:, :d].T + W[:, d]
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(log_norm - z[np.arange(n), y]))
    probs = _softmax_rows(logits)
    probs[np.arange(n), y] -= 1.0
    gw = probs.T @ X / n
    gb = probs.mean(axis=0)
    grad = np.concatenate([gw, gb[:, None]], axis=1).ravel()
    if l2:
        loss += 0.5 * l2 * float(w @ w)
        grad = grad + l2 * w
    return loss, grad


def mlp_loss_grad(
    w: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    hidden: int,
    num_labels: int,
    l2: float,
) -> tuple[float, np.ndarray]:
    """One-hidden-layer tanh network with softmax cross-entropy."""
    n, d = X.shape
    s0 = hidden * d
    s1 = s0 + hidden
    s2 = s1 + num_labels * hidden
    W1 = w[:s0].reshape(hidden, d)
    b1 = w[s0:s1]
    W2 = w[s1:s2].reshape(num_labels, hidden)
    b2 = w[s2:]
    a1 = np.tanh(X @ W1.T + b1)
    logits = a1 @ W2.T + b2
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(log_norm - z[np.arange(n), y]))
    probs = _softmax_rows(logits)
    probs[np.arange(n), y] -= 1.0
    probs /= n
    gW2 = probs.T @ a1
    gb2 = probs.sum(axis=0)
    back = (probs @ W2) * (1.0 - a1 * a1)
    gW1 = back.T @ X
    gb1 = back.sum(axis=0)
    grad = np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])
    if l2:
        loss += 0.5 * l2 * float(w @ w)
        grad = grad + l2 * w
    return loss, grad
