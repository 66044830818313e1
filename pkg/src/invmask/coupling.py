"""Invertible coupling blocks and their dense-connectivity subnetworks.

Each block carries three subnetworks: phi lifts the protected branch into an
additive update of the mask branch, rho turns the updated mask branch into
bounded log-scales for the protected branch, and eta adds a mask-branch term
on top.  Because every subnetwork only ever reads the *other* branch of the
value it modifies, the block inverts in closed form for any parameter values.

The scale path is exp(alpha(rho(.))) with alpha(y) = c * (2*sigmoid(y) - 1),
so log-scales live in (-c, c): no exp overflow, and alpha(0) = 0.  Combined
with zero-initialized final layers in every subnetwork, a freshly built block
is exactly the identity map.
"""

import numpy as np

from .errors import ShapeError
from .tensor import Parameter, concat_channels, conv2d


class DenseBlock:
    """Five 3x3 conv layers with concatenative skips; last layer zero-init.

    leaky_relu(0.2) after the first four layers, nothing after the fifth.
    Output keeps the input's spatial size with ``out_channels`` channels.
    """

    LAYERS = 5

    def __init__(self, in_channels, out_channels, growth=32, name="dense", rng=None, dtype=np.float32):
        if rng is None:
            rng = np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.growth = growth
        self.weights = []
        self.biases = []
        c_in = in_channels
        for i in range(self.LAYERS):
            last = i == self.LAYERS - 1
            c_out = out_channels if last else growth
            if last:
                w = np.zeros((c_out, c_in, 3, 3), dtype=dtype)
            else:
                # He scaling damped by 0.1 keeps early activations small
                std = 0.1 * np.sqrt(2.0 / (c_in * 9))
                w = (rng.standard_normal((c_out, c_in, 3, 3)) * std).astype(dtype)
            self.weights.append(Parameter(w, f"{name}.conv{i + 1}.weight", dtype=dtype))
            self.biases.append(Parameter(np.zeros((1, c_out, 1, 1), dtype=dtype), f"{name}.conv{i + 1}.bias", dtype=dtype))
            c_in += c_out if not last else 0

    def __call__(self, x):
        feat = x
        for i in range(self.LAYERS - 1):
            out = conv2d(feat, self.weights[i], self.biases[i], padding=1).leaky_relu(0.2)
            feat = concat_channels([feat, out])
        return conv2d(feat, self.weights[-1], self.biases[-1], padding=1)

    def parameters(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b


class CouplingBlock:
    """One invertible embedding/recovering block over paired branch tensors."""

    def __init__(self, channels, growth=32, clamp=2.0, name="block", rng=None, dtype=np.float32):
        if clamp <= 0:
            raise ValueError(f"clamp must be positive, got {clamp}")
        self.channels = channels
        self.clamp = float(clamp)
        self.rho = DenseBlock(channels, channels, growth, f"{name}.rho", rng, dtype)
        self.phi = DenseBlock(channels, channels, growth, f"{name}.phi", rng, dtype)
        self.eta = DenseBlock(channels, channels, growth, f"{name}.eta", rng, dtype)

    def _alpha(self, y):
        return y.sigmoid() * (2.0 * self.clamp) - self.clamp

    def _check(self, a, b):
        if a.shape != b.shape:
            raise ShapeError(f"coupling block: branch shapes {a.shape} and {b.shape} differ")
        if a.shape[1] != self.channels:
            raise ShapeError(f"coupling block expects {self.channels} channels, got {a.shape[1]}")

    def forward(self, protected, mask):
        self._check(protected, mask)
        mask_next = mask + self.phi(protected)
        scale = self._alpha(self.rho(mask_next)).exp()
        protected_next = protected * scale + self.eta(mask_next)
        return protected_next, mask_next

    def inverse(self, protected_next, mask_next):
        self._check(protected_next, mask_next)
        scale = (-self._alpha(self.rho(mask_next))).exp()
        protected = (protected_next - self.eta(mask_next)) * scale
        mask = mask_next - self.phi(protected)
        return protected, mask

    def parameters(self):
        yield from self.rho.parameters()
        yield from self.phi.parameters()
        yield from self.eta.parameters()
