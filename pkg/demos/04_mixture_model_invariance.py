"""Why the set aggregation matters: order invariance versus the concat
ablation.

A mixture is an unordered set: (30% A, 70% B) and (70% B, 30% A) are the
same electrolyte. The attention-aggregated model returns the same
prediction for both; the concatenate-and-pad ablation does not.
"""

import itertools

from molsets import MixtureInput, ModelConfig, build_graph, build_model, predict
from molsets.model import forward

thf = build_graph("C1CCOC1")
glyme = build_graph("COCOC")
benzene = build_graph("C1=CC=CC=C1")
salt = build_graph("F[P-](F)(F)(F)(F)F.[Li+]")

solvents = [(thf, 0.2), (glyme, 0.5), (benzene, 0.3)]

print("=== Full model: attention aggregation over the solvent set ===")
params = build_model(ModelConfig.for_conv("graphconv", seed=0))
for perm in itertools.permutations(solvents):
    mix = MixtureInput(list(perm), salt, molality=1.0)
    names = [g.source_smiles for g, _ in perm]
    print(f"  {names} -> {predict(params, mix):+.12f}")

print()
print("=== Concat ablation: same mixture, order-dependent prediction ===")
concat_params = build_model(ModelConfig.for_conv("graphconv", variant="concat", seed=0))
for perm in itertools.permutations(solvents):
    mix = MixtureInput(list(perm), salt, molality=1.0)
    names = [g.source_smiles for g, _ in perm]
    print(f"  {names} -> {float(forward(concat_params, mix).data[0]):+.12f}")

print()
print("=== Attention scores react to the constituents, not just weights ===")
wsum_params = build_model(ModelConfig.for_conv("graphconv", variant="wsum", seed=0))
single_thf = MixtureInput([(thf, 1.0)], salt, 1.0)
half_half = MixtureInput([(thf, 0.5), (glyme, 0.5)], salt, 1.0)
print("molsets  singleton vs 50/50:",
      predict(params, single_thf), "->", predict(params, half_half))
print("weighted-sum ablation same inputs:",
      float(forward(wsum_params, single_thf).data[0]), "->",
      float(forward(wsum_params, half_half).data[0]))
