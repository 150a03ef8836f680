"""Dense float64 tensors with reverse-mode gradient recording.

Operations compute eagerly with numpy. While a Tape is active (used as a
context manager), every operation is recorded so that `backward` can
accumulate gradients in reverse order. Tapes are thread-confined: each
thread sees only its own active tape, so independent forward/backward
passes may run concurrently. Broadcasting is restricted to
scalar-with-tensor (one operand of total size 1); all other shapes must
match exactly.
"""

from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np


class DimensionError(ValueError):
    pass


class TapeError(RuntimeError):
    pass


class Tensor:
    __slots__ = ("data", "tape")

    def __init__(self, data, tape=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape})"


_LOCAL = threading.local()


def _active_tape():
    stack = getattr(_LOCAL, "stack", None)
    return stack[-1] if stack else None


class Tape:
    """Records operations for one forward pass; discarded after backward."""

    def __init__(self):
        self._nodes: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []
        self._watched: list[Tensor] = []
        self.gradients: dict[Tensor, np.ndarray] = {}

    def __enter__(self) -> "Tape":
        stack = getattr(_LOCAL, "stack", None)
        if stack is None:
            stack = _LOCAL.stack = []
        stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _LOCAL.stack.pop()

    def watch(self, *tensors: Tensor) -> None:
        """Register parameters so backward reports them even when untouched."""
        self._watched.extend(tensors)


def _record(out: Tensor, inputs: tuple[Tensor, ...], grad_fn: Callable) -> Tensor:
    tape = _active_tape()
    if tape is not None:
        out.tape = tape
        tape._nodes.append((out, inputs, grad_fn))
    return out


def backward(tape: Tape, output: Tensor) -> dict[Tensor, np.ndarray]:
    """Accumulate gradients of a scalar output for every taped tensor.

    Watched tensors always appear in the result (zeros when the output
    does not depend on them). Replaying the same tape is deterministic.
    """
    if output.data.size != 1:
        raise TapeError(f"backward requires a scalar output, got shape {output.data.shape}")
    if output.tape is not tape:
        raise TapeError("output was not recorded on this tape")

    grads: dict[int, np.ndarray] = {id(output): np.ones_like(output.data)}
    by_id: dict[int, Tensor] = {id(output): output}

    for out, inputs, grad_fn in reversed(tape._nodes):
        g = grads.get(id(out))
        if g is None:
            continue
        for inp, gi in zip(inputs, grad_fn(g)):
            if gi is None:
                continue
            key = id(inp)
            by_id[key] = inp
            prev = grads.get(key)
            grads[key] = gi if prev is None else prev + gi

    result = {by_id[key]: val for key, val in grads.items()}
    for tensor in tape._watched:
        if tensor not in result:
            result[tensor] = np.zeros_like(tensor.data)
    tape.gradients = result
    return result


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return np.asarray(g.sum()).reshape(shape)


def _binary(a: Tensor, b: Tensor, name: str, fwd, grad_fn) -> Tensor:
    av, bv = a.data, b.data
    if av.shape != bv.shape and av.size != 1 and bv.size != 1:
        raise DimensionError(f"{name} shapes {av.shape} and {bv.shape} do not match")
    out = Tensor(fwd(av, bv))

    def grad(g):
        ga, gb = grad_fn(g, av, bv)
        return _unbroadcast(ga, av.shape), _unbroadcast(gb, bv.shape)

    return _record(out, (a, b), grad)


def add(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, "add", np.add, lambda g, av, bv: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, "sub", np.subtract, lambda g, av, bv: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, "mul", np.multiply, lambda g, av, bv: (g * bv, g * av))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out = Tensor(a.data * c)
    return _record(out, (a,), lambda g: (g * c,))


def relu(a: Tensor) -> Tensor:
    av = a.data
    out = Tensor(np.maximum(av, 0.0))
    return _record(out, (a,), lambda g: (g * (av > 0.0),))


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    av = a.data
    out = Tensor(np.where(av > 0.0, av, slope * av))
    return _record(out, (a,), lambda g: (g * np.where(av > 0.0, 1.0, slope),))


def exp(a: Tensor) -> Tensor:
    ev = np.exp(a.data)
    out = Tensor(ev)
    return _record(out, (a,), lambda g: (g * ev,))


def log(a: Tensor) -> Tensor:
    av = a.data
    out = Tensor(np.log(av))
    return _record(out, (a,), lambda g: (g / av,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.data, b.data
    if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise DimensionError(f"matmul shapes {av.shape} and {bv.shape} are incompatible")
    out = Tensor(av @ bv)
    return _record(out, (a, b), lambda g: (g @ bv.T, av.T @ g))


def softmax(x: Tensor) -> Tensor:
    """Numerically stable softmax of a 1-D tensor."""
    xv = x.data
    if xv.ndim != 1:
        raise DimensionError(f"softmax expects a 1-D tensor, got shape {xv.shape}")
    shifted = np.exp(xv - xv.max())
    y = shifted / shifted.sum()
    out = Tensor(y)

    def grad(g):
        return (y * (g - float(np.dot(g, y))),)

    return _record(out, (x,), grad)


def reduce_sum(x: Tensor, axis: int | None = None) -> Tensor:
    xv = x.data
    out = Tensor(xv.sum(axis=axis))

    def grad(g):
        if axis is None:
            return (np.broadcast_to(g, xv.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), xv.shape).copy(),)

    return _record(out, (x,), grad)


def reduce_mean(x: Tensor, axis: int | None = None) -> Tensor:
    xv = x.data
    n = xv.size if axis is None else xv.shape[axis]
    out = Tensor(xv.mean(axis=axis))

    def grad(g):
        if axis is None:
            return (np.broadcast_to(g / n, xv.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis) / n, xv.shape).copy(),)

    return _record(out, (x,), grad)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise DimensionError("concat of an empty sequence")
    values = [p.data for p in parts]
    for v in values[1:]:
        if v.ndim != values[0].ndim:
            raise DimensionError(
                f"concat ranks differ: {values[0].shape} vs {v.shape}"
            )
    out = Tensor(np.concatenate(values, axis=axis))
    sizes = [v.shape[axis] for v in values]
    offsets = np.cumsum(sizes)[:-1]

    def grad(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _record(out, tuple(parts), grad)


def rows(x: Tensor, indices: Sequence[int]) -> Tensor:
    """Gather rows of a 2-D tensor; gradient scatter-adds back."""
    xv = x.data
    if xv.ndim != 2:
        raise DimensionError(f"rows expects a 2-D tensor, got shape {xv.shape}")
    idx = list(indices)
    out = Tensor(xv[idx])

    def grad(g):
        gx = np.zeros_like(xv)
        np.add.at(gx, idx, g)
        return (gx,)

    return _record(out, (x,), grad)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    xv = x.data
    out = Tensor(xv.reshape(shape))
    return _record(out, (x,), lambda g: (g.reshape(xv.shape),))


def finite_diff_gradient(
    f: Callable[[], float], params: Sequence[Tensor], h: float = 1e-5
) -> dict[Tensor, np.ndarray]:
    """Central-difference gradient of f with respect to each parameter entry.

    f is evaluated with the parameters perturbed in place; it must read
    them afresh on every call and have no other state.
    """
    if h <= 0:
        raise ValueError("finite difference step must be positive")
    result: dict[Tensor, np.ndarray] = {}
    for param in params:
        grad = np.zeros_like(param.data)
        flat = param.data.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            f_plus = float(f())
            flat[i] = saved - h
            f_minus = float(f())
            flat[i] = saved
            gflat[i] = (f_plus - f_minus) / (2.0 * h)
        result[param] = grad
    return result
