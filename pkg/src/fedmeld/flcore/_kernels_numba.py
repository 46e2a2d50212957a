"""Loop kernels compiled with numba.

Same contracts as the numpy backend; results agree to float tolerance but
not bitwise, since summation orders differ.  Import only when numba is
installed (the backend module guards this).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _logistic_core(w, X, y, num_labels, l2):
    n, d = X.shape
    stride = d + 1
    grad = np.zeros(w.size)
    loss = 0.0
    logits = np.empty(num_labels)
    for i in range(n):
        for c in range(num_labels):
            s = w[c * stride + d]
            for k in range(d):
                s += w[c * stride + k] * X[i, k]
            logits[c] = s
        mx = logits[0]
        for c in range(1, num_labels):
            if logits[c] > mx:
                mx = logits[c]
        norm = 0.0
        for c in range(num_labels):
            norm += math.exp(logits[c] - mx)
        loss += math.log(norm) - (logits[y[i]] - mx)
        for c in range(num_labels):
            coeff = math.exp(logits[c] - mx) / norm
            if c == y[i]:
                coeff -= 1.0
            base = c * stride
            for k in range(d):
                grad[base + k] += coeff * X[i, k]
            grad[base + d] += coeff
    inv = 1.0 / n
    loss *= inv
    for idx in range(w.size):
        grad[idx] *= inv
    if l2 > 0.0:
        acc = 0.0
        for idx in range(w.size):
            acc += w[idx] * w[idx]
            grad[idx] += l2 * w[idx]
        loss += 0.5 * l2 * acc
    return loss, grad


@njit(cache=True)
def _mlp_core(w, X, y, hidden, num_labels, l2):
    n, d = X.shape
    s0 = hidden * d
    s1 = s0 + hidden
    s2 = s1 + num_labels * hidden
    grad = np.zeros(w.size)
    loss = 0.0
    a1 = np.empty(hidden)
    logits = np.empty(num_labels)
    probs = np.empty(num_labels)
    for i in range(n):
        for h in range(hidden):
            s = w[s0 + h]
            for k in range(d):
                s += w[h * d + k] * X[i, k]
            a1[h] = math.tanh(s)
        for c in range(num_labels):
            s = w[s2 + c]
            for h in range(hidden):
                s += w[s1 + c * hidden + h] * a1[h]
            logits[c] = s
        mx = logits[0]
        for c in range(1, num_labels):
            if logits[c] > mx:
                mx = logits[c]
        norm = 0.0
        for c in range(num_labels):
            norm += math.exp(logits[c] - mx)
        loss += math.log(norm) - (logits[y[i]] - mx)
        for c in range(num_labels):
            probs[c] = math.exp(logits[c] - mx) / norm
            if c == y[i]:
                probs[c] -= 1.0
        for c in range(num_labels):
            grad[s2 + c] += probs[c]
            for h in range(hidden):
                grad[s1 + c * hidden + h] += probs[c] * a1[h]
        for h in range(hidden):
            back = 0.0
            for c in range(num_labels):
                back += probs[c] * w[s1 + c * hidden + h]
            back *= 1.0 - a1[h] * a1[h]
            grad[s0 + h] += back
            for k in range(d):
                grad[h * d + k] += back * X[i, k]
    inv = 1.0 / n
    loss *= inv
    for idx in range(w.size):
        grad[idx] *= inv
    if l2 > 0.0:
        acc = 0.0
        for idx in range(w.size):
            acc += w[idx] * w[idx]
            grad[idx] += l2 * w[idx]
        loss += 0.5 * l2 * acc
    return loss, grad


def logistic_loss_grad(w, X, y, num_labels, l2):
    loss, grad = _logistic_core(w, X, y, num_labels, l2)
    return float(loss), grad


def mlp_loss_grad(w, X, y, hidden, num_labels, l2):
    loss, grad = _mlp_core(w, X, y, hidden, num_labels, l2)
    return float(loss), grad
