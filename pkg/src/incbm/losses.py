"""Loss functions with exact analytic gradients.

Every function returns ``(loss, grad)`` where ``grad`` has the shape of the
differentiated argument. All math runs in float64; none of these allocate
beyond a few temporaries of the input size.
"""
from __future__ import annotations

import numpy as np

from .validation import as_matrix, as_vector, check_fraction, check_targets


def softmax_cross_entropy(logits, targets) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy over rows.

    loss = mean_n -log softmax(logits[n])[targets[n]]
    grad = (softmax(logits) - onehot(targets)) / N
    """
    z = as_matrix(logits, "logits")
    n, k = z.shape
    if n == 0:
        raise ValueError("logits must have at least one row")
    y = check_targets(targets, n, k)

    # Log-sum-exp with the row max subtracted keeps exp() in range.
    zmax = z.max(axis=1, keepdims=True)
    shifted = z - zmax
    expz = np.exp(shifted)
    denom = expz.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(denom)
    loss = float(-log_probs[np.arange(n), y].mean())

    grad = expz / denom
    grad[np.arange(n), y] -= 1.0
    grad /= n
    return loss, grad


def cosine_alignment(scores, reference) -> tuple[float, np.ndarray]:
    """Negative mean column-wise cosine similarity between cubed activations.

    Both matrices are cubed elementwise, then the cosine is taken per column
    (across the batch dimension) and averaged over columns with a minus sign,
    so a perfect match scores -1 and an anti-correlated pair scores +1.
    A column that is all zero after cubing contributes 0 and gets zero
    gradient; the loss stays finite for any finite input.

    Returns the loss and its gradient with respect to ``scores`` (the
    ``reference`` matrix is treated as a constant target).
    """
    e = as_matrix(scores, "scores")
    r = as_matrix(reference, "reference", rows=e.shape[0], cols=e.shape[1])
    n_cols = e.shape[1]
    if n_cols == 0:
        raise ValueError("scores must have at least one column")

    u = e ** 3
    v = r ** 3
    un = np.linalg.norm(u, axis=0)
    vn = np.linalg.norm(v, axis=0)
    valid = (un > 0.0) & (vn > 0.0)

    denom = np.where(valid, un * vn, 1.0)
    cos = np.where(valid, (u * v).sum(axis=0) / denom, 0.0)
    loss = float(-cos.sum() / n_cols)

    # d(-cos_i)/du_i = -(v_i / (|u_i||v_i|) - cos_i * u_i / |u_i|^2)
    un_safe = np.where(valid, un, 1.0)
    d_u = -(v / denom - cos * u / (un_safe ** 2)) / n_cols
    d_u[:, ~valid] = 0.0
    grad = d_u * 3.0 * e ** 2
    return loss, grad


def elastic_net_penalty(weights, l1_ratio: float, *, squared: bool = True
                        ) -> tuple[float, np.ndarray]:
    """Elastic-net penalty phi*|W|_1 + (1-phi)/2 * ridge term.

    With ``squared=True`` (the default) the ridge term is the squared
    Frobenius norm, giving the usual smooth gradient (1-phi)*W. With
    ``squared=False`` the unsquared Frobenius norm is used instead and the
    gradient is (1-phi)/2 * W/|W|_F, with a zero gradient at the origin.
    The L1 subgradient takes sign(0) = 0.
    """
    w = as_matrix(weights, "weights")
    phi = check_fraction(l1_ratio, "l1_ratio")

    l1 = np.abs(w).sum()
    grad = phi * np.sign(w)
    if squared:
        loss = phi * l1 + 0.5 * (1.0 - phi) * (w ** 2).sum()
        grad = grad + (1.0 - phi) * w
    else:
        fro = np.linalg.norm(w)
        loss = phi * l1 + 0.5 * (1.0 - phi) * fro
        if fro > 0.0:
            grad = grad + 0.5 * (1.0 - phi) * w / fro
    return float(loss), grad


def mahalanobis_penalty(rows, mean, precision) -> tuple[float, np.ndarray]:
    """Mean squared Mahalanobis distance of each row to a reference Gaussian.

    loss = (1/K) sum_k (q_k - mu)^T S (q_k - mu)  with S the precision matrix.
    The gradient uses S + S^T so it is exact even for an unsymmetrized S;
    for the symmetric case it reduces to the familiar (2/K) S (q_k - mu).
    """
    q = as_matrix(rows, "rows")
    k, d = q.shape
    if k == 0:
        raise ValueError("rows must be non-empty")
    mu = as_vector(mean, "mean", size=d)
    s = as_matrix(precision, "precision", rows=d, cols=d)

    diff = q - mu
    proj = diff @ s
    loss = float((proj * diff).sum() / k)
    grad = diff @ (s + s.T) / k
    return loss, grad
