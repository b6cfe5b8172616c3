"""Bias-corrected Adam over dense float64 parameters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """First/second moment buffers plus hyperparameters for one parameter."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def for_param(cls, param: np.ndarray, lr: float = 0.001, beta1: float = 0.9,
                  beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        param = np.asarray(param, dtype=np.float64)
        return cls(lr=lr, beta1=beta1, beta2=beta2, eps=eps, step=0,
                   m=np.zeros_like(param), v=np.zeros_like(param))


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState) -> np.ndarray:
    """Apply one Adam update in place and return the parameter.

    m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
    param <- param - lr * m_hat / (sqrt(v_hat) + eps)
    with m_hat, v_hat the bias-corrected moments. Bit-deterministic:
    identical inputs and state produce identical outputs.
    """
    if param.shape != grad.shape:
        raise ValueError(f"param shape {param.shape} does not match grad shape {grad.shape}")
    if param.shape != state.m.shape:
        raise ValueError("optimizer state was initialized for a different parameter shape")
    g = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient contains non-finite values")

    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    param -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return param
