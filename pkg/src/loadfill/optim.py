"""Adam with bias correction, written out so updates are exactly auditable."""

from __future__ import annotations

import torch


def adam_update(value, grad, m, v, t, lr=1e-4, beta1=0.5, beta2=0.9, eps=1e-8):
    """One functional Adam step; returns (new_value, new_m, new_v).

    With zero starting moments the first step is lr * g / (|g| + eps).
    """
    if t < 1:
        raise ValueError("step counter t must be >= 1")
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return value - lr * m_hat / (v_hat.sqrt() + eps), m, v


class Adam:
    """Holds per-parameter moments; parameters update in place from .grad."""

    def __init__(self, params, lr=1e-4, beta1=0.5, beta2=0.9, eps=1e-8):
        self.params = [p for p in params]
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [torch.zeros_like(p) for p in self.params]
        self._v = [torch.zeros_like(p) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    @torch.no_grad()
    def step(self):
        self.t += 1
        for p, m, v in zip(self.params, self._m, self._v):
            if p.grad is None:
                continue
            new_p, new_m, new_v = adam_update(p, p.grad, m, v, self.t, self.lr, self.beta1, self.beta2, self.eps)
            p.copy_(new_p)
            m.copy_(new_m)
            v.copy_(new_v)
