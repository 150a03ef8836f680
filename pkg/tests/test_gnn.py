import numpy as np
import pytest

from molsets import autodiff as ad
from molsets.autodiff import Tape, Tensor
from molsets.gnn import (
    ConvParams,
    GnnConfig,
    DenseParams,
    GraphTensors,
    conv_forward,
    conv_param_tensors,
    dense_forward,
    dmpnn_forward,
    global_mean_pool,
    init_conv,
    uniform_init,
)


def _scalar_conv(kind):
    p = ConvParams(kind, 1, 1)
    p.w1 = Tensor([[1.0]])
    p.w2 = Tensor([[1.0]])
    return p


def test_graphconv_two_node_example():
    gt = GraphTensors(2, [(0, 1, 1.0)])
    x = Tensor([[1.0], [2.0]])
    out = conv_forward(_scalar_conv("graphconv"), x, gt).data
    assert np.allclose(out, [[3.0], [3.0]])


def test_graphconv_uses_edge_weights():
    gt = GraphTensors(2, [(0, 1, 2.0)])
    x = Tensor([[1.0], [2.0]])
    out = conv_forward(_scalar_conv("graphconv"), x, gt).data
    assert np.allclose(out, [[5.0], [4.0]])


def test_sageconv_isolated_node():
    gt = GraphTensors(1, [])
    p = _scalar_conv("sageconv")
    p.w2 = Tensor([[7.0]])
    out = conv_forward(p, Tensor([[5.0]]), gt).data
    assert np.allclose(out, [[5.0]])


def test_gcnconv_two_node_example():
    gt = GraphTensors(2, [(0, 1, 1.0)])
    p = ConvParams("gcnconv", 1, 1, w1=Tensor([[1.0]]))
    out = conv_forward(p, Tensor([[1.0], [2.0]]), gt).data
    assert np.allclose(out, [[1.5], [1.5]])


def test_gatconv_zero_attention_is_uniform():
    gt = GraphTensors(2, [(0, 1, 1.0)])
    p = ConvParams(
        "gatconv", 1, 1, w1=Tensor([[2.0]]), w2=Tensor([[3.0]]), att=Tensor([0.0, 0.0])
    )
    out = conv_forward(p, Tensor([[1.0], [1.0]]), gt).data
    # alpha uniform over {self, neighbor}: 0.5 * W1 x_i + 0.5 * W2 x_j
    assert np.allclose(out, [[2.5], [2.5]])


def test_gatconv_attention_sums_to_one():
    # With shared weights and identical node features the output reduces
    # to W x regardless of the attention logits, so the scores sum to 1.
    rng = np.random.default_rng(4)
    gt = GraphTensors(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.5), (0, 3, 1.0)])
    w = rng.uniform(-1, 1, (3, 3))
    p = ConvParams(
        "gatconv",
        3,
        3,
        w1=Tensor(w),
        w2=Tensor(w.copy()),
        att=Tensor(rng.uniform(-1, 1, 6)),
    )
    row = rng.uniform(-1, 1, 3)
    x = np.tile(row, (4, 1))
    out = conv_forward(p, Tensor(x), gt).data
    assert np.abs(out - row @ w).max() <= 1e-12


def test_dmpnn_two_node_fixed_point():
    rng = np.random.default_rng(5)
    p = init_conv("dmpnn", 2, 3, rng)
    gt = GraphTensors(2, [(0, 1, 1.0)])
    x = Tensor(rng.uniform(-1, 1, (2, 2)))
    one = dmpnn_forward(p, x, gt, iterations=1).data
    two = dmpnn_forward(p, x, gt, iterations=2).data
    assert np.array_equal(one, two)


def test_dmpnn_isolated_node_readout():
    rng = np.random.default_rng(6)
    p = init_conv("dmpnn", 2, 3, rng)
    gt = GraphTensors(1, [])
    x = np.array([[0.3, -0.7]])
    out = dmpnn_forward(p, Tensor(x), gt, iterations=2).data
    expected = np.maximum(np.concatenate([x, np.zeros((1, 3))], axis=1) @ p.w_out.data, 0.0)
    assert np.allclose(out, expected)


def test_global_mean_pool():
    assert np.array_equal(global_mean_pool(Tensor([[1.0, 2.0], [3.0, 4.0]])).data, [2.0, 3.0])
    assert np.array_equal(global_mean_pool(Tensor([[7.0, 8.0]])).data, [7.0, 8.0])


def test_global_mean_pool_permutation_invariant():
    rng = np.random.default_rng(7)
    x = rng.uniform(-1, 1, (6, 4))
    perm = rng.permutation(6)
    assert np.allclose(
        global_mean_pool(Tensor(x)).data, global_mean_pool(Tensor(x[perm])).data
    )


def test_dense_forward_examples():
    identity = DenseParams(w=Tensor(np.eye(2)), b=Tensor(np.zeros(2)))
    x = Tensor([-1.0, 1.0])
    assert np.array_equal(dense_forward(identity, x).data, [-1.0, 1.0])
    assert np.array_equal(dense_forward(identity, x, "relu").data, [0.0, 1.0])
    doubler = DenseParams(w=Tensor([[2.0, 0.0], [0.0, 2.0]]), b=Tensor([1.0, 1.0]))
    assert np.array_equal(dense_forward(doubler, Tensor([1.0, 1.0])).data, [3.0, 3.0])


def test_conv_rejects_wrong_feature_dim():
    gt = GraphTensors(2, [(0, 1, 1.0)])
    p = init_conv("graphconv", 3, 2, np.random.default_rng(0))
    with pytest.raises(ad.DimensionError):
        conv_forward(p, Tensor(np.zeros((2, 5))), gt)


def _random_graph(rng, n=6):
    edges = []
    seen = set()
    for _ in range(8):
        i, j = rng.integers(0, n, 2)
        if i == j:
            continue
        key = (min(i, j), max(i, j))
        if key in seen:
            continue
        seen.add(key)
        edges.append((key[0], key[1], float(rng.choice([1.0, 1.5, 2.0, 3.0]))))
    return edges


@pytest.mark.parametrize("kind", ["graphconv", "sageconv", "gcnconv", "gatconv", "dmpnn"])
def test_node_permutation_equivariance(kind):
    rng = np.random.default_rng(42)
    n = 6
    for trial in range(5):
        edges = _random_graph(rng, n)
        x = rng.uniform(-1, 1, (n, 4))
        params = init_conv(kind, 4, 3, np.random.default_rng(100 + trial))
        perm = rng.permutation(n)
        relabel = {old: new for new, old in enumerate(perm)}
        permuted_edges = [(relabel[i], relabel[j], w) for i, j, w in edges]

        gt = GraphTensors(n, edges)
        gt_perm = GraphTensors(n, permuted_edges)
        if kind == "dmpnn":
            out = dmpnn_forward(params, Tensor(x), gt, 2).data
            out_perm = dmpnn_forward(params, Tensor(x[perm]), gt_perm, 2).data
        else:
            out = conv_forward(params, Tensor(x), gt).data
            out_perm = conv_forward(params, Tensor(x[perm]), gt_perm).data
        assert np.abs(out_perm - out[perm]).max() <= 1e-10


@pytest.mark.parametrize("kind", ["graphconv", "sageconv", "gcnconv", "gatconv", "dmpnn"])
def test_conv_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(9)
    gt = GraphTensors(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.5)])
    x = Tensor(rng.uniform(-1, 1, (4, 3)))
    params = init_conv(kind, 3, 2, rng)
    proj = Tensor(rng.uniform(-1, 1, (4, 2)))
    tensors = [t for _, t in conv_param_tensors(params)]

    def run():
        if kind == "dmpnn":
            out = dmpnn_forward(params, x, gt, 2)
        else:
            out = conv_forward(params, x, gt)
        return ad.reduce_sum(ad.mul(out, proj))

    with Tape() as tape:
        tape.watch(*tensors)
        loss = run()
    grads = ad.backward(tape, loss)
    fd = ad.finite_diff_gradient(lambda: run().item(), tensors)
    for t in tensors:
        denom = max(np.linalg.norm(fd[t]), np.linalg.norm(grads[t]), 1e-10)
        assert np.linalg.norm(grads[t] - fd[t]) / denom <= 1e-6


def test_gnn_config_validation():
    config = GnnConfig("graphconv", num_layers=3, hidden_dim=16, representation_dim=32)
    assert config.seed == 0
    with pytest.raises(ValueError):
        GnnConfig("nope", 3, 16, 32)
    with pytest.raises(ValueError):
        GnnConfig("graphconv", 0, 16, 32)
    with pytest.raises(ValueError):
        GnnConfig("graphconv", 3, 16, 0)


def test_uniform_init_is_seeded_and_scaled():
    a = uniform_init(np.random.default_rng(1), (4, 4), 16)
    b = uniform_init(np.random.default_rng(1), (4, 4), 16)
    assert np.array_equal(a.data, b.data)
    assert np.abs(a.data).max() <= 0.25
