"""Reverse-mode gradients on the tensor layer, checked against finite
differences.

Everything downstream (graph convolutions, attention, the training loop)
runs on these few operations, so this is the layer worth convincing
yourself about first.
"""

import numpy as np

from molsets import Tape, Tensor, backward, finite_diff_gradient
from molsets import autodiff as ad

rng = np.random.default_rng(0)

print("=== A scalar chain: y = mean(relu(x W)) ===")
w = Tensor(rng.uniform(-1, 1, (3, 4)))
x = Tensor(rng.uniform(-1, 1, (5, 3)))

with Tape() as tape:
    tape.watch(w)
    y = ad.reduce_mean(ad.relu(ad.matmul(x, w)))
grads = backward(tape, y)
print("y =", y.item())
print("dy/dW:")
print(grads[w])

print()
print("=== The same gradient by central differences ===")
fd = finite_diff_gradient(lambda: ad.reduce_mean(ad.relu(ad.matmul(x, w))).item(), [w])
print("max |backward - finite difference| =", np.abs(grads[w] - fd[w]).max())

print()
print("=== Softmax is stable and shift-invariant ===")
logits = Tensor([1000.0, 1001.0, 999.0])
print("softmax(large logits):", ad.softmax(logits).data)
print("softmax(shifted):     ", ad.softmax(Tensor(logits.data - 1000.0)).data)

print()
print("=== Gradients accumulate through shared subexpressions ===")
v = Tensor([3.0])
with Tape() as tape:
    tape.watch(v)
    y = ad.reduce_sum(ad.mul(v, v))  # v appears twice
print("d(v^2)/dv at v=3:", backward(tape, y)[v][0], "(expect 6)")
