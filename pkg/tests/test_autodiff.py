import numpy as np
import pytest

from molsets import autodiff as ad
from molsets.autodiff import DimensionError, Tape, TapeError, Tensor


def _rel_err(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


def _check_against_fd(build_scalar, params, tol=1e-6):
    """backward vs central finite differences on the same scalar function."""
    with Tape() as tape:
        tape.watch(*params)
        out = build_scalar()
    grads = ad.backward(tape, out)
    fd = ad.finite_diff_gradient(lambda: build_scalar().item(), params)
    for p in params:
        assert _rel_err(grads[p], fd[p]) <= tol


def test_matmul_examples():
    eye = Tensor([[1.0, 0.0], [0.0, 1.0]])
    v = Tensor([[3.0], [4.0]])
    assert np.array_equal(ad.matmul(eye, v).data, [[3.0], [4.0]])
    assert ad.matmul(Tensor([[1.0, 2.0]]), v).data[0, 0] == 11.0
    with pytest.raises(DimensionError):
        ad.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))


def test_elementwise_examples():
    assert np.array_equal(ad.relu(Tensor([-1.0, 2.0])).data, [0.0, 2.0])
    assert np.allclose(ad.leaky_relu(Tensor([-1.0, 2.0]), 0.2).data, [-0.2, 2.0])
    assert np.array_equal(ad.add(Tensor([1.0, 2.0]), Tensor([3.0, 4.0])).data, [4.0, 6.0])
    with pytest.raises(DimensionError):
        ad.add(Tensor([1.0, 2.0]), Tensor([1.0, 2.0, 3.0]))


def test_softmax_examples():
    assert np.array_equal(ad.softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])
    assert np.array_equal(ad.softmax(Tensor([17.3])).data, [1.0])
    out = ad.softmax(Tensor([np.log(1.0), np.log(3.0)])).data
    assert np.allclose(out, [0.25, 0.75], atol=1e-15)


def test_softmax_properties():
    rng = np.random.default_rng(0)
    for _ in range(25):
        x = rng.uniform(-5, 5, size=rng.integers(1, 9))
        y = ad.softmax(Tensor(x)).data
        assert abs(y.sum() - 1.0) <= 1e-12
        shifted = ad.softmax(Tensor(x + 3.7)).data
        assert np.abs(y - shifted).max() <= 1e-12


def test_reduce_examples():
    m = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(ad.reduce_mean(m, axis=0).data, [2.0, 3.0])
    assert ad.reduce_sum(Tensor([1.0, 2.0, 3.0])).item() == 6.0
    single = Tensor([[5.0, 6.0]])
    assert np.array_equal(ad.reduce_mean(single, axis=0).data, [5.0, 6.0])


def test_concat_examples():
    assert np.array_equal(ad.concat([Tensor([1.0, 2.0]), Tensor([3.0])]).data, [1.0, 2.0, 3.0])
    assert np.array_equal(ad.concat([Tensor([7.0]), Tensor(np.zeros(0))]).data, [7.0])
    wide = ad.concat([Tensor(np.ones((2, 2))), Tensor(np.ones((2, 3)))], axis=1)
    assert wide.data.shape == (2, 5)


def test_backward_linear():
    x = Tensor([2.0])
    with Tape() as tape:
        tape.watch(x)
        y = ad.reduce_sum(ad.scale(x, 3.0))
    assert ad.backward(tape, y)[x][0] == 3.0


def test_backward_square_through_mul():
    x = Tensor([5.0])
    with Tape() as tape:
        tape.watch(x)
        y = ad.reduce_sum(ad.mul(x, x))
    assert ad.backward(tape, y)[x][0] == 10.0


def test_backward_softmax_jacobian():
    x = Tensor([1.3, 1.3])
    pick_first = Tensor([1.0, 0.0])
    with Tape() as tape:
        tape.watch(x)
        y = ad.reduce_sum(ad.mul(ad.softmax(x), pick_first))
    grad = ad.backward(tape, y)[x]
    assert np.allclose(grad, [0.25, -0.25], atol=1e-15)


def test_backward_requires_scalar_on_tape():
    x = Tensor([1.0, 2.0])
    with Tape() as tape:
        tape.watch(x)
        y = ad.scale(x, 2.0)
    with pytest.raises(TapeError):
        ad.backward(tape, y)
    with pytest.raises(TapeError):
        ad.backward(Tape(), Tensor([1.0]))


def test_backward_untouched_param_gets_zeros():
    x = Tensor([1.0])
    unused = Tensor(np.ones((2, 2)))
    with Tape() as tape:
        tape.watch(x, unused)
        y = ad.reduce_sum(ad.mul(x, x))
    grads = ad.backward(tape, y)
    assert np.array_equal(grads[unused], np.zeros((2, 2)))


def test_backward_replay_is_bit_identical():
    rng = np.random.default_rng(1)
    w = Tensor(rng.uniform(-1, 1, (3, 3)))
    x = Tensor(rng.uniform(-1, 1, (3, 2)))
    with Tape() as tape:
        tape.watch(w, x)
        y = ad.reduce_sum(ad.relu(ad.matmul(w, x)))
    first = ad.backward(tape, y)
    second = ad.backward(tape, y)
    for t in (w, x):
        assert np.array_equal(first[t], second[t])


def test_finite_diff_square():
    x = Tensor([3.0])
    fd = ad.finite_diff_gradient(lambda: float(x.data[0] ** 2), [x])
    assert abs(fd[x][0] - 6.0) <= 1e-8


def test_finite_diff_constant():
    x = Tensor([1.0, -1.0])
    fd = ad.finite_diff_gradient(lambda: 42.0, [x])
    assert np.array_equal(fd[x], [0.0, 0.0])


def test_gradients_per_op_match_finite_differences():
    rng = np.random.default_rng(7)
    a = Tensor(rng.uniform(-2, -0.5, (3, 4)))  # keep relu inputs off the kink
    b = Tensor(rng.uniform(0.5, 2, (3, 4)))
    m1 = Tensor(rng.uniform(-2, 2, (3, 4)))
    m2 = Tensor(rng.uniform(-2, 2, (4, 2)))
    vec = Tensor(rng.uniform(-2, 2, 5))
    proj = Tensor(rng.uniform(-1, 1, (3, 4)))
    proj2 = Tensor(rng.uniform(-1, 1, (3, 2)))
    proj_vec = Tensor(rng.uniform(-1, 1, 5))
    scalar = Tensor([1.5])

    cases = [
        (lambda: ad.reduce_sum(ad.mul(ad.add(a, b), proj)), [a, b]),
        (lambda: ad.reduce_sum(ad.mul(ad.sub(a, b), proj)), [a, b]),
        (lambda: ad.reduce_sum(ad.mul(ad.mul(a, b), proj)), [a, b]),
        (lambda: ad.reduce_sum(ad.mul(ad.scale(a, -2.5), proj)), [a]),
        (lambda: ad.reduce_sum(ad.mul(ad.add(a, scalar), proj)), [a, scalar]),
        (lambda: ad.reduce_sum(ad.mul(ad.relu(a), proj)), [a]),
        (lambda: ad.reduce_sum(ad.mul(ad.relu(b), proj)), [b]),
        (lambda: ad.reduce_sum(ad.mul(ad.leaky_relu(a, 0.2), proj)), [a]),
        (lambda: ad.reduce_sum(ad.mul(ad.exp(a), proj)), [a]),
        (lambda: ad.reduce_sum(ad.mul(ad.log(b), proj)), [b]),
        (lambda: ad.reduce_sum(ad.mul(ad.matmul(m1, m2), proj2)), [m1, m2]),
        (lambda: ad.reduce_sum(ad.mul(ad.softmax(vec), proj_vec)), [vec]),
        (lambda: ad.reduce_sum(ad.mul(ad.reduce_mean(a, axis=0), Tensor(np.arange(4.0)))), [a]),
        (lambda: ad.reduce_sum(ad.mul(ad.reduce_sum(a, axis=1), Tensor(np.arange(3.0)))), [a]),
        (lambda: ad.reduce_sum(ad.mul(ad.concat([a, b], axis=1), Tensor(np.ones((3, 8))))), [a, b]),
        (lambda: ad.reduce_sum(ad.mul(ad.rows(m1, [2, 0, 2]), Tensor(np.ones((3, 4))))), [m1]),
        (lambda: ad.reduce_sum(ad.mul(ad.reshape(a, (4, 3)), Tensor(np.ones((4, 3))))), [a]),
    ]
    for build, params in cases:
        _check_against_fd(build, params)


def test_two_layer_network_gradient():
    rng = np.random.default_rng(11)
    w1 = Tensor(rng.uniform(-1, 1, (4, 5)))
    w2 = Tensor(rng.uniform(-1, 1, (5, 1)))
    x = Tensor(rng.uniform(-2, 2, (3, 4)))

    def network():
        hidden = ad.relu(ad.matmul(x, w1))
        return ad.reduce_mean(ad.matmul(hidden, w2))

    _check_against_fd(network, [w1, w2, x])


def test_matmul_associativity():
    rng = np.random.default_rng(3)
    a = Tensor(rng.uniform(-1, 1, (3, 4)))
    b = Tensor(rng.uniform(-1, 1, (4, 5)))
    c = Tensor(rng.uniform(-1, 1, (5, 2)))
    left = ad.matmul(ad.matmul(a, b), c).data
    right = ad.matmul(a, ad.matmul(b, c)).data
    assert np.abs(left - right).max() <= 1e-10


def test_ops_are_untaped_outside_context():
    a = Tensor([1.0, 2.0])
    out = ad.relu(a)
    assert out.tape is None

def test_independent_tapes_on_concurrent_threads():
    import threading

    results = {}

    def worker(seed):
        rng = np.random.default_rng(seed)
        w = Tensor(rng.uniform(-1, 1, (3, 3)))
        x = Tensor(rng.uniform(-1, 1, (3, 1)))
        for _ in range(50):
            with Tape() as tape:
                tape.watch(w)
                y = ad.reduce_sum(ad.matmul(w, x))
            grads = ad.backward(tape, y)
        results[seed] = (grads[w], x.data.reshape(-1))

    threads = [threading.Thread(target=worker, args=(seed,)) for seed in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(results) == 4
    for grad, x_row in results.values():
        # d/dW of sum(W x) puts x along every row
        assert np.allclose(grad, np.tile(x_row, (3, 1)))

