import itertools

import numpy as np
import pytest

from molsets.autodiff import Tensor
from molsets.chem import build_graph
from molsets.model import (
    AttentionParams,
    MixtureInput,
    ModelConfig,
    GraphStore,
    aggregate_mixture,
    build_model,
    embed_molecule,
    export_representation,
    load_checkpoint,
    mixture_from_record,
    named_parameters,
    predict,
    predict_concat_variant,
    predict_weighted_sum_variant,
    save_checkpoint,
    transform_head,
)
from molsets.gnn import DenseParams

THF = build_graph("C1CCOC1")
GLYME = build_graph("COCOC")
BENZENE = build_graph("C1=CC=CC=C1")
TOLUENE = build_graph("CC1=CC=CC=C1")
SALT = build_graph("F[P-](F)(F)(F)(F)F.[Li+]")

MICRO = dict(num_layers=2, hidden_dim=3, representation_dim=4, attention_dim=2, rho_hidden_dims=(3,))


def micro_model(variant="molsets", conv="graphconv", seed=0):
    return build_model(ModelConfig.for_conv(conv, variant=variant, seed=seed, **MICRO))


def test_embed_with_zero_weights_returns_readout_bias():
    params = micro_model(seed=1)
    phi = params.phi_solvent
    for _, tensor in named_parameters(params):
        tensor.data[...] = 0.0
    phi.readout.b.data[...] = np.array([0.5, -1.0, 2.0, 0.25])
    z = embed_molecule(phi, THF).data
    assert np.array_equal(z, [0.5, -1.0, 2.0, 0.25])


def test_embed_isomorphic_graphs_agree():
    params = micro_model(seed=2)
    a = build_graph("C1CCOC1")
    b = build_graph("O1CCCC1")  # same ring, different atom order
    za = embed_molecule(params.phi_solvent, a).data
    zb = embed_molecule(params.phi_solvent, b).data
    assert np.abs(za - zb).max() <= 1e-10


def _random_attention(rng, d=4, dk=3):
    return AttentionParams(
        wq=Tensor(rng.uniform(-1, 1, (d, dk))),
        wk=Tensor(rng.uniform(-1, 1, (d, dk))),
        wv=Tensor(rng.uniform(-1, 1, (d, d))),
        d_k=dk,
    )


def test_aggregate_singleton_is_value_projection():
    rng = np.random.default_rng(3)
    att = _random_attention(rng)
    z = rng.uniform(-1, 1, 4)
    out = aggregate_mixture(att, [(Tensor(z), 1.0)]).data
    assert np.array_equal(out, z @ att.wv.data)


def test_aggregate_two_identical_molecules():
    rng = np.random.default_rng(4)
    att = _random_attention(rng)
    z = rng.uniform(-1, 1, 4)
    out = aggregate_mixture(att, [(Tensor(z), 0.5), (Tensor(z.copy()), 0.5)]).data
    assert np.allclose(out, 0.5 * (z @ att.wv.data), atol=1e-15)


def test_aggregate_permutation_invariance():
    rng = np.random.default_rng(5)
    att = _random_attention(rng)
    triple = [(Tensor(rng.uniform(-1, 1, 4)), w) for w in (0.2, 0.3, 0.5)]
    base = aggregate_mixture(att, triple).data
    for perm in itertools.permutations(triple):
        out = aggregate_mixture(att, list(perm)).data
        assert np.abs(out - base).max() <= 1e-10


def test_aggregate_rejects_empty_set():
    att = _random_attention(np.random.default_rng(0))
    with pytest.raises(ValueError):
        aggregate_mixture(att, [])


def test_transform_head_zero_weights_returns_bias():
    rho = [DenseParams(w=Tensor(np.zeros((3, 1))), b=Tensor([0.75]))]
    out = transform_head(rho, Tensor([1.0]), Tensor([2.0]), 3.0)
    assert out.data[0] == 0.75


def test_transform_head_hand_arithmetic():
    rho = [DenseParams(w=Tensor([[2.0], [3.0], [5.0]]), b=Tensor([7.0]))]
    out = transform_head(rho, Tensor([1.0]), Tensor([2.0]), 4.0)
    assert out.data[0] == 2.0 + 6.0 + 20.0 + 7.0


def test_transform_head_dead_molality_column():
    w = np.array([[2.0], [3.0], [0.0]])  # zero weight on the molality input
    rho = [DenseParams(w=Tensor(w), b=Tensor([1.0]))]
    a = transform_head(rho, Tensor([1.0]), Tensor([2.0]), 0.0).data[0]
    b = transform_head(rho, Tensor([1.0]), Tensor([2.0]), 99.0).data[0]
    assert a == b


def test_predict_is_pure():
    params = micro_model(seed=6)
    mix = MixtureInput([(THF, 0.4), (GLYME, 0.6)], SALT, 1.2)
    assert predict(params, mix) == predict(params, mix)


def test_predict_permutation_invariance():
    params = micro_model(seed=7)
    solvents = [(THF, 0.2), (GLYME, 0.3), (BENZENE, 0.5)]
    base = predict(params, MixtureInput(solvents, SALT, 1.0))
    for perm in itertools.permutations(solvents):
        out = predict(params, MixtureInput(list(perm), SALT, 1.0))
        assert abs(out - base) <= 1e-9


def test_predict_singleton_equals_degenerate_path():
    params = micro_model(seed=20)
    z = embed_molecule(params.phi_solvent, THF)
    z_mix = aggregate_mixture(params.attention, [(z, 1.0)])
    z_salt = embed_molecule(params.phi_salt, SALT)
    expected = transform_head(params.rho, z_mix, z_salt, 1.0).data[0]
    assert predict(params, MixtureInput([(THF, 1.0)], SALT, 1.0)) == expected


def test_predict_split_solvent_order_independent():
    # Splitting one solvent into two half-weight copies: only order
    # independence is promised, not equality with the unsplit mixture.
    params = micro_model(seed=8)
    split = [(THF, 0.25), (THF, 0.25), (GLYME, 0.5)]
    a = predict(params, MixtureInput(split, SALT, 1.0))
    b = predict(params, MixtureInput(list(reversed(split)), SALT, 1.0))
    assert abs(a - b) <= 1e-9


def test_wsum_singleton_and_zero_weight():
    params = micro_model("wsum", seed=9)
    single = predict_weighted_sum_variant(params, MixtureInput([(THF, 1.0)], SALT, 1.0))
    padded = predict_weighted_sum_variant(
        params, MixtureInput([(THF, 1.0), (GLYME, 0.0)], SALT, 1.0)
    )
    assert single == padded


def test_wsum_permutation_invariance():
    params = micro_model("wsum", seed=10)
    solvents = [(THF, 0.3), (GLYME, 0.3), (TOLUENE, 0.4)]
    base = predict_weighted_sum_variant(params, MixtureInput(solvents, SALT, 0.8))
    for perm in itertools.permutations(solvents):
        out = predict_weighted_sum_variant(params, MixtureInput(list(perm), SALT, 0.8))
        assert abs(out - base) <= 1e-9


def test_wsum_weight_shift_between_identical_solvents():
    params = micro_model("wsum", seed=11)
    a = predict_weighted_sum_variant(
        params, MixtureInput([(THF, 0.25), (THF, 0.75)], SALT, 1.0)
    )
    b = predict_weighted_sum_variant(
        params, MixtureInput([(THF, 0.5), (THF, 0.5)], SALT, 1.0)
    )
    assert abs(a - b) <= 1e-12


def test_concat_variant_is_order_sensitive():
    hits = 0
    for seed in range(20):
        params = micro_model("concat", seed=100 + seed)
        a = predict_concat_variant(params, MixtureInput([(THF, 0.5), (GLYME, 0.5)], SALT, 1.0))
        b = predict_concat_variant(params, MixtureInput([(GLYME, 0.5), (THF, 0.5)], SALT, 1.0))
        if abs(a - b) > 1e-6:
            hits += 1
    assert hits >= 18


def test_concat_variant_identical_solvents_swap_is_noop():
    params = micro_model("concat", seed=12)
    a = predict_concat_variant(params, MixtureInput([(THF, 0.5), (THF, 0.5)], SALT, 1.0))
    b = predict_concat_variant(params, MixtureInput([(THF, 0.5), (THF, 0.5)], SALT, 1.0))
    assert a == b


def test_concat_variant_enforces_max_solvents():
    params = micro_model("concat", seed=13)
    solvents = [(THF, 0.2), (GLYME, 0.2), (BENZENE, 0.2), (TOLUENE, 0.2), (SALT, 0.2)]
    with pytest.raises(ValueError):
        predict_concat_variant(params, MixtureInput(solvents, SALT, 1.0))


def test_variant_dispatch_is_strict():
    params = micro_model("wsum", seed=14)
    mix = MixtureInput([(THF, 1.0)], SALT, 1.0)
    with pytest.raises(ValueError):
        predict(params, mix)
    with pytest.raises(ValueError):
        predict_concat_variant(params, mix)


def test_export_representation_dimensions():
    params = build_model(ModelConfig.for_conv("graphconv", seed=15))
    mix = MixtureInput([(THF, 0.5), (GLYME, 0.5)], SALT, 1.0)
    assert export_representation(params, mix).shape == (32,)


def test_export_singleton_equals_constituent():
    params = micro_model(seed=16)
    single = export_representation(params, MixtureInput([(THF, 1.0)], SALT, 1.0))
    z = embed_molecule(params.phi_solvent, THF)
    assert np.array_equal(single, z.data @ params.attention.wv.data)


def test_export_mixture_is_not_weighted_sum_of_constituents():
    params = micro_model(seed=17)
    mixture = export_representation(params, MixtureInput([(THF, 0.5), (GLYME, 0.5)], SALT, 1.0))
    a = export_representation(params, MixtureInput([(THF, 1.0)], SALT, 1.0))
    b = export_representation(params, MixtureInput([(GLYME, 1.0)], SALT, 1.0))
    assert np.abs(mixture - (0.5 * a + 0.5 * b)).max() > 1e-12


def test_mixture_validation():
    with pytest.raises(ValueError):
        MixtureInput([], SALT, 1.0)
    with pytest.raises(ValueError):
        MixtureInput([(THF, 0.5), (GLYME, 0.6)], SALT, 1.0)
    with pytest.raises(ValueError):
        MixtureInput([(THF, 1.0)], SALT, -0.1)


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    params = build_model(ModelConfig.for_conv("gatconv", variant="molsets", seed=18))
    path = tmp_path / "model.json"
    save_checkpoint(params, str(path))
    loaded = load_checkpoint(str(path))

    for (name_a, ta), (name_b, tb) in zip(named_parameters(params), named_parameters(loaded)):
        assert name_a == name_b
        assert np.array_equal(ta.data, tb.data), name_a
    assert loaded.config == params.config

    mix = MixtureInput([(THF, 0.5), (GLYME, 0.5)], SALT, 1.0)
    assert predict(params, mix) == predict(loaded, mix)

    again = tmp_path / "model2.json"
    save_checkpoint(loaded, str(again))
    assert path.read_bytes() == again.read_bytes()


def test_build_model_is_seed_deterministic():
    a = build_model(ModelConfig.for_conv("graphconv", seed=19))
    b = build_model(ModelConfig.for_conv("graphconv", seed=19))
    for (_, ta), (_, tb) in zip(named_parameters(a), named_parameters(b)):
        assert np.array_equal(ta.data, tb.data)


def test_graph_store_reuses_objects():
    store = GraphStore()
    assert store.get("C1CCOC1") is store.get("C1CCOC1")
    assert store.get("C1CCOC1") is not store.get("C1CCOC1", 1000.0)


def test_mixture_from_record_duck_typed():
    class Record:
        solvent_smiles = ["C1CCOC1", "COCOC"]
        weight_fractions = [0.4, 0.6]
        mol_weight_overrides = [None, 250.0]
        salt_smiles = "F[P-](F)(F)(F)(F)F.[Li+]"
        molality = 1.5

    mix = mixture_from_record(Record())
    assert len(mix.solvents) == 2
    assert mix.solvents[1][0].log_mol_weight == pytest.approx(np.log10(250.0))
    assert mix.molality == 1.5
