"""
The differentiation engine and the optimizer
============================================

A two-layer network fits a noisy sine with nothing but the package's own
tensors and Adam, then one gradient entry is checked by central differences.
"""

import numpy as np

from eccanc.autodiff import tensor
from eccanc.nn import AdamState, DenseLayer, adam_step

rng = np.random.default_rng(0)
x = rng.uniform(-3, 3, size=(256, 1))
y = np.sin(x) + 0.05 * rng.normal(size=x.shape)

hidden = DenseLayer(1, 32, "tanh", rng=rng)
out = DenseLayer(32, 1, "identity", rng=rng)
params = hidden.parameters() + out.parameters()
opt = AdamState(lr=0.01)


def loss_of(xb, yb):
    err = out(hidden(tensor(xb))) - tensor(yb)
    return (err * err).mean()


for step in range(1501):
    loss = loss_of(x, y)
    loss.backward()
    adam_step(params, opt)
    if step % 300 == 0:
        print(f"step {step:4d}  mse {loss.item():.5f}")

# gradient of one hidden weight, analytic vs numeric
w = hidden.weights
loss_of(x, y).backward()
analytic = w.grad[0, 3]
h = 1e-6
w.data[0, 3] += h
up = loss_of(x, y).item()
w.data[0, 3] -= 2 * h
down = loss_of(x, y).item()
w.data[0, 3] += h
print(f"\nd loss / d w[0,3]: analytic {analytic:.8f}  numeric {(up - down) / (2 * h):.8f}")
