"""RMSprop: per-parameter running average of squared gradients.

Update rule, applied elementwise per parameter:

    v <- rho * v + (1 - rho) * g^2
    p <- p - lr * g / (sqrt(v) + eps)
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError


class RmsProp:
    """Stateful optimizer over a named parameter set.

    ``params`` maps names to grad-requiring tensors; ``step`` reads each
    tensor's accumulated gradient and mutates its values in place.  A
    non-finite gradient aborts the step before any parameter is touched.
    """

    def __init__(self, params, lr=1e-4, rho=0.9, eps=1e-8):
        self.params = dict(params)
        self.lr = float(lr)
        self.rho = float(rho)
        self.eps = float(eps)
        self.square_avg = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        grads = {}
        for name, p in self.params.items():
            g = p.grad
            if not np.isfinite(g).all():
                raise NumericError(f"non-finite gradient for parameter '{name}'; step aborted")
            grads[name] = g
        for name, p in self.params.items():
            g = grads[name]
            v = self.square_avg[name]
            v *= self.rho
            v += (1.0 - self.rho) * g * g
            p.data -= self.lr * g / (np.sqrt(v) + self.eps)
