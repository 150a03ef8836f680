"""SMILES-subset parsing and molecular graph featurization.

The parser covers the grammar needed for electrolyte constituents:
organic-subset atoms (B C N O F S Cl P Br I), bracket atoms with charge
and explicit hydrogen counts, lowercase aromatic atoms (b c n o s), bond
symbols ``- = # :``, ring closures ``1``-``9`` and ``%nn``, branches, and
the ``.`` component separator. Stereochemistry, isotopes, and wildcard
atoms are rejected with a diagnostic. ``Cu`` and ``Au`` placeholder atoms
(marking monomer connection sites in polymer inputs) are replaced by
carbon at parse time.

Graphs carry a 13-dimensional node feature vector per heavy atom: a
one-hot block over (B, C, N, O, F, S, Cl) followed by atomic number,
atomic mass, formal charge, Pauling electronegativity, van der Waals
radius, and attached-hydrogen count. Each bond carries a single scalar
feature: 1, 2, 3 for single/double/triple, 1.5 for aromatic.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .elements import (
    ELEMENTS,
    HYDROGEN_MASS,
    ONE_HOT_ORDER,
    SUPPORTED_ELEMENTS,
    element_data,
)

logger = logging.getLogger(__name__)

NODE_FEATURE_DIM = 13

AROMATIC_SYMBOLS = frozenset("bcnos")
ORGANIC_SUBSET = ("Cl", "Br", "B", "C", "N", "O", "F", "S", "P", "I")
PLACEHOLDER_ELEMENTS = frozenset({"Cu", "Au"})

_BOND_ORDERS = {"-": 1.0, "=": 2.0, "#": 3.0, ":": 1.5}

_BRACKET_RE = re.compile(
    r"^(?P<element>[A-Z][a-z]?|[bcnos])"
    r"(?P<hydrogens>H\d*)?"
    r"(?P<charge>\+{1,3}|-{1,3}|[+-]\d+)?$"
)


class SmilesParseError(ValueError):
    """Raised for malformed or unsupported SMILES; carries the character offset."""

    def __init__(self, message: str, smiles: str, position: int):
        self.position = position
        self.smiles = smiles
        super().__init__(f"{message} (at offset {position} in {smiles!r})")


class FeaturizationError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    aromatic: bool = False
    explicit_h: int | None = None  # from bracket notation, None otherwise
    implicit_h: int = 0  # filled by assign_implicit_hydrogens


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    order_code: float  # 1, 1.5, 2, or 3


@dataclass(eq=False)
class MolecularGraph:
    node_features: np.ndarray  # (n, 13)
    edges: tuple[Bond, ...]  # undirected, deduplicated, i < j
    log_mol_weight: float  # log10 Dalton
    source_smiles: str
    _neighbors: list[list[tuple[int, float]]] | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]

    def neighbors(self) -> list[list[tuple[int, float]]]:
        """Per-node list of (neighbor index, bond order code), symmetric view."""
        if self._neighbors is None:
            nbrs: list[list[tuple[int, float]]] = [[] for _ in range(self.n_nodes)]
            for bond in self.edges:
                nbrs[bond.i].append((bond.j, bond.order_code))
                nbrs[bond.j].append((bond.i, bond.order_code))
            self._neighbors = nbrs
        return self._neighbors


def _parse_bracket(content: str, smiles: str, offset: int) -> Atom:
    match = _BRACKET_RE.match(content)
    if match is None:
        raise SmilesParseError(f"malformed bracket atom [{content}]", smiles, offset)

    symbol = match.group("element")
    aromatic = symbol in AROMATIC_SYMBOLS
    element = symbol.capitalize() if aromatic else symbol

    if element in PLACEHOLDER_ELEMENTS:
        element = "C"
    elif element not in SUPPORTED_ELEMENTS:
        raise SmilesParseError(f"unsupported element {element!r}", smiles, offset)

    h_token = match.group("hydrogens")
    if h_token is None:
        explicit_h = 0
    elif h_token == "H":
        explicit_h = 1
    else:
        explicit_h = int(h_token[1:])

    charge_token = match.group("charge")
    if charge_token is None:
        charge = 0
    elif charge_token[-1].isdigit():
        charge = int(charge_token)
    else:
        charge = len(charge_token) * (1 if charge_token[0] == "+" else -1)

    return Atom(element, formal_charge=charge, aromatic=aromatic, explicit_h=explicit_h)


def parse_smiles(smiles: str) -> list[tuple[list[Atom], list[Bond]]]:
    """Parse a SMILES string into (atoms, bonds) per connected component.

    Bond endpoints are indices local to their component. Raises
    SmilesParseError with a character offset on malformed input.
    """
    if not smiles:
        raise SmilesParseError("empty SMILES", smiles, 0)
    if not smiles.isascii():
        raise SmilesParseError("non-ASCII SMILES", smiles, 0)

    components: list[tuple[list[Atom], list[Bond]]] = []
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    anchor: int | None = None
    branch_stack: list[int] = []
    # ring number -> (open atom index, bond symbol order or None, offset)
    open_rings: dict[int, tuple[int, float | None, int]] = {}
    pending_bond: float | None = None
    pending_pos = 0

    def finish_component(pos: int) -> None:
        nonlocal atoms, bonds, anchor
        if branch_stack:
            raise SmilesParseError("unbalanced parentheses", smiles, pos)
        if open_rings:
            num, (_, _, open_pos) = next(iter(open_rings.items()))
            raise SmilesParseError(f"unmatched ring closure {num}", smiles, open_pos)
        if pending_bond is not None:
            raise SmilesParseError("dangling bond symbol", smiles, pending_pos)
        if not atoms:
            raise SmilesParseError("empty component", smiles, pos)
        components.append((atoms, bonds))
        atoms, bonds = [], []
        anchor = None

    def add_atom(atom: Atom, pos: int) -> None:
        nonlocal anchor, pending_bond
        idx = len(atoms)
        atoms.append(atom)
        if anchor is not None:
            order = pending_bond
            if order is None:
                order = 1.5 if (atoms[anchor].aromatic and atom.aromatic) else 1.0
            bonds.append(Bond(anchor, idx, order))
        pending_bond = None
        anchor = idx

    def close_ring(number: int, pos: int) -> None:
        nonlocal pending_bond
        if anchor is None:
            raise SmilesParseError("ring closure before any atom", smiles, pos)
        if number in open_rings:
            other, open_order, _ = open_rings.pop(number)
            if other == anchor:
                raise SmilesParseError(
                    f"ring closure {number} bonds an atom to itself", smiles, pos
                )
            order = pending_bond if pending_bond is not None else open_order
            if (
                pending_bond is not None
                and open_order is not None
                and pending_bond != open_order
            ):
                raise SmilesParseError(
                    f"conflicting bond orders on ring closure {number}", smiles, pos
                )
            if order is None:
                order = 1.5 if (atoms[other].aromatic and atoms[anchor].aromatic) else 1.0
            bonds.append(Bond(other, anchor, order))
        else:
            open_rings[number] = (anchor, pending_bond, pos)
        pending_bond = None

    i = 0
    n = len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            end = smiles.find("]", i + 1)
            if end < 0:
                raise SmilesParseError("unterminated bracket atom", smiles, i)
            add_atom(_parse_bracket(smiles[i + 1 : end], smiles, i), i)
            i = end + 1
        elif ch in _BOND_ORDERS:
            if pending_bond is not None:
                raise SmilesParseError("consecutive bond symbols", smiles, i)
            pending_bond = _BOND_ORDERS[ch]
            pending_pos = i
            i += 1
        elif ch == "(":
            if anchor is None:
                raise SmilesParseError("branch opened before any atom", smiles, i)
            if pending_bond is not None:
                raise SmilesParseError("bond symbol before branch open", smiles, i)
            branch_stack.append(anchor)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesParseError("unbalanced parentheses", smiles, i)
            if pending_bond is not None:
                raise SmilesParseError("dangling bond symbol", smiles, pending_pos)
            anchor = branch_stack.pop()
            i += 1
        elif ch.isdigit():
            close_ring(int(ch), i)
            i += 1
        elif ch == "%":
            if i + 2 >= n or not smiles[i + 1 : i + 3].isdigit():
                raise SmilesParseError("malformed %nn ring closure", smiles, i)
            close_ring(int(smiles[i + 1 : i + 3]), i)
            i += 3
        elif ch == ".":
            finish_component(i)
            i += 1
        elif ch in "/\\@":
            raise SmilesParseError("stereochemistry markers are not supported", smiles, i)
        elif ch == "*":
            raise SmilesParseError("wildcard atoms are not supported", smiles, i)
        elif ch in AROMATIC_SYMBOLS:
            add_atom(Atom(ch.upper(), aromatic=True), i)
            i += 1
        else:
            for symbol in ORGANIC_SUBSET:
                if smiles.startswith(symbol, i):
                    add_atom(Atom(symbol), i)
                    i += len(symbol)
                    break
            else:
                if ch.isupper() or ch.islower():
                    raise SmilesParseError(f"unsupported element {ch!r}", smiles, i)
                raise SmilesParseError(f"unexpected character {ch!r}", smiles, i)

    finish_component(n)
    return components


def assign_implicit_hydrogens(atoms: list[Atom], bonds: list[Bond]) -> list[Atom]:
    """Fill implicit hydrogen counts from the standard valence model.

    Bracket atoms take their explicit H count verbatim (0 if absent).
    Other atoms get default_valence (sign-adjusted by formal charge) minus
    the rounded-up sum of incident bond orders, clamped at zero.
    """
    order_sums = [0.0] * len(atoms)
    for bond in bonds:
        order_sums[bond.i] += bond.order_code
        order_sums[bond.j] += bond.order_code

    assigned = []
    for atom, total in zip(atoms, order_sums):
        if atom.explicit_h is not None:
            h = atom.explicit_h
        else:
            valence = ELEMENTS[atom.element].default_valence + atom.formal_charge
            h = valence - math.ceil(total)
            if h < 0:
                logger.warning(
                    "%s exceeds its default valence (%d bonds vs %d); clamping H count to 0",
                    atom.element,
                    math.ceil(total),
                    valence,
                )
                h = 0
        assigned.append(replace(atom, implicit_h=h))
    return assigned


def atom_features(atom: Atom) -> np.ndarray:
    """13-dim feature vector: 7-way one-hot then numeric atomic descriptors."""
    try:
        data = element_data(atom.element)
    except KeyError as exc:
        raise FeaturizationError(str(exc)) from exc

    vec = np.zeros(NODE_FEATURE_DIM)
    if atom.element in ONE_HOT_ORDER:
        vec[ONE_HOT_ORDER.index(atom.element)] = 1.0
    vec[7] = data.atomic_number
    vec[8] = data.atomic_mass
    vec[9] = atom.formal_charge
    vec[10] = data.electronegativity
    vec[11] = data.vdw_radius
    vec[12] = atom.implicit_h
    return vec


def bond_feature(bond: Bond) -> float:
    return bond.order_code


def molecular_weight(atoms: list[Atom]) -> float:
    """Total mass in Dalton, counting implicit hydrogens at 1.008 Da each."""
    return sum(
        ELEMENTS[a.element].atomic_mass + a.implicit_h * HYDROGEN_MASS for a in atoms
    )


def build_graph(smiles: str, mol_weight_override: float | None = None) -> MolecularGraph:
    """Parse and featurize a molecule (all components merged into one graph).

    mol_weight_override supplies a dataset-reported molecular weight (used
    for polymers, where the graph covers only the capped monomer); when
    absent, the weight is computed from the parsed atoms.
    """
    components = parse_smiles(smiles)

    all_atoms: list[Atom] = []
    edges: list[Bond] = []
    seen: set[tuple[int, int]] = set()
    for atoms, bonds in components:
        offset = len(all_atoms)
        all_atoms.extend(assign_implicit_hydrogens(atoms, bonds))
        for bond in bonds:
            i, j = sorted((bond.i + offset, bond.j + offset))
            if (i, j) in seen:
                continue
            seen.add((i, j))
            edges.append(Bond(i, j, bond.order_code))

    features = np.stack([atom_features(a) for a in all_atoms])
    weight = mol_weight_override if mol_weight_override is not None else molecular_weight(all_atoms)
    if weight <= 0:
        raise FeaturizationError(f"non-positive molecular weight {weight!r}")

    return MolecularGraph(
        node_features=features,
        edges=tuple(edges),
        log_mol_weight=math.log10(weight),
        source_smiles=smiles,
    )
