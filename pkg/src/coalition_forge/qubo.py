"""QUBO formulation of the optimal bipartition of a coalition.

A split of coalition ``c`` is encoded with one binary variable per member
(bit 1 = the member moves to side B). The energy of an assignment is the
weight of the edges it cuts, so minimizing the energy maximizes the value
kept inside the two sides.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import TooSmallError
from .graph import WeightedGraph, _as_coalition


@dataclass(frozen=True)
class Qubo:
    """Upper-triangular QUBO: ``E(x) = sum_{i<=j} coeffs[i, j] x_i x_j + offset``."""

    num_vars: int
    coeffs: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        clean = {}
        for (i, j), c in dict(self.coeffs).items():
            i, j, c = int(i), int(j), float(c)
            if i > j:
                i, j = j, i
            if not (0 <= i and j < self.num_vars):
                raise ValueError(f"term ({i}, {j}) outside 0..{self.num_vars - 1}")
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient at ({i}, {j})")
            clean[(i, j)] = clean.get((i, j), 0.0) + c
        if not math.isfinite(self.offset):
            raise ValueError("non-finite offset")
        object.__setattr__(self, "coeffs", MappingProxyType(clean))
        object.__setattr__(self, "offset", float(self.offset))

    def upper_matrix(self) -> np.ndarray:
        """Dense upper-triangular coefficient matrix (diagonal = linear terms)."""
        mat = np.zeros((self.num_vars, self.num_vars))
        for (i, j), c in self.coeffs.items():
            mat[i, j] += c
        return mat

    def energies(self, bits: np.ndarray) -> np.ndarray:
        """Vectorized energy of each row of a 0/1 matrix."""
        x = np.asarray(bits, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.num_vars:
            raise ValueError(f"expected an (m, {self.num_vars}) array, got shape {x.shape}")
        if self.num_vars == 0:
            return np.full(x.shape[0], self.offset)
        return np.einsum("ij,ij->i", x @ self.upper_matrix(), x) + self.offset

    def to_dict(self) -> dict:
        terms = [[i, j, c] for (i, j), c in sorted(self.coeffs.items())]
        return {"n": self.num_vars, "offset": self.offset, "terms": terms}

    @classmethod
    def from_dict(cls, data: dict) -> "Qubo":
        return cls(data["n"], {(i, j): c for i, j, c in data["terms"]}, data.get("offset", 0.0))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class VarMap:
    """Binds QUBO variables to graph nodes; ``fixed_node`` sits on side A (bit 0)."""

    var_to_node: tuple[int, ...]
    fixed_node: int | None = None

    @property
    def members(self) -> frozenset:
        extra = () if self.fixed_node is None else (self.fixed_node,)
        return frozenset(self.var_to_node) | frozenset(extra)

    def decode(self, bits: Sequence[int]) -> tuple[frozenset, frozenset]:
        """Split an assignment into ``(side_a, side_b)``; extra trailing bits are ignored."""
        side_b = frozenset(u for u, b in zip(self.var_to_node, bits) if b)
        return self.members - side_b, side_b


def energy(q: Qubo, x: Sequence[int]) -> float:
    if len(x) != q.num_vars:
        raise ValueError(f"assignment has length {len(x)}, Qubo has {q.num_vars} variables")
    total = q.offset
    for (i, j), c in q.coeffs.items():
        if x[i] and x[j]:
            total += c
    return total


def build_split_qubo(
    g: WeightedGraph, c: Iterable[int], fix_symmetry: bool = True
) -> tuple[Qubo, VarMap]:
    """QUBO whose energy at ``x`` equals the cut weight of the side ``{x_i = 1}``.

    Each internal edge ``(u, v, w)`` contributes ``w (x_u + x_v - 2 x_u x_v)``.
    With ``fix_symmetry`` the smallest member is pinned to side A and dropped
    from the variables, so the all-zeros assignment means "no split".
    """
    c = _as_coalition(g, c)
    if len(c) < 2:
        raise TooSmallError(f"cannot split a coalition of size {len(c)}")
    members = sorted(c)
    fixed = members[0] if fix_symmetry else None
    free = members[1:] if fix_symmetry else members
    index = {u: i for i, u in enumerate(free)}
    coeffs: dict[tuple[int, int], float] = {}

    def add(i, j, w):
        coeffs[(i, j)] = coeffs.get((i, j), 0.0) + w

    for u in members:
        for v, w in g.neighbors(u).items():
            if v <= u or v not in c:
                continue
            if u == fixed:
                add(index[v], index[v], w)
            elif v == fixed:
                add(index[u], index[u], w)
            else:
                i, j = index[u], index[v]
                add(i, i, w)
                add(j, j, w)
                add(min(i, j), max(i, j), -2.0 * w)
    return Qubo(len(free), coeffs, 0.0), VarMap(tuple(free), fixed)


def default_penalty(g: WeightedGraph, c: Iterable[int]) -> float:
    """``1 + sum |w|`` over the internal edges of ``c``: dominates any cut."""
    c = frozenset(c)
    return 1.0 + math.fsum(abs(w) for u, v, w in g.edges if u in c and v in c)


def add_proper_split_penalty(q: Qubo, lam: float) -> Qubo:
    """Add ``lam`` to the energy of the all-zeros (no split) assignment.

    ``y = OR(x_0..x_{k-1})`` is built from a chain of 2-input OR gadgets, one
    auxiliary variable per gadget, appended after the original variables. The
    last auxiliary earns a reward ``-lam`` against a constant ``+lam``. Gadget
    violations cost at least ``2 lam``, so minimizing over the auxiliaries
    gives exactly ``E(x) + lam * [x == 0]``.
    """
    if not lam > 0:
        raise ValueError(f"penalty weight must be positive, got {lam}")
    k = q.num_vars
    if k == 0:
        return Qubo(0, {}, q.offset + lam)
    coeffs = dict(q.coeffs)
    strength = 2.0 * lam

    def add(i, j, w):
        key = (min(i, j), max(i, j))
        coeffs[key] = coeffs.get(key, 0.0) + w

    def or_gadget(a, b, y):
        # P * (ab + (a + b)(1 - 2y) + y): zero iff y = a OR b, else >= P
        add(a, b, strength)
        add(a, a, strength)
        add(b, b, strength)
        add(a, y, -2.0 * strength)
        add(b, y, -2.0 * strength)
        add(y, y, strength)

    num_vars = k
    prev = 0
    if k == 1:
        # y = x_0 directly: P * (x + y - 2xy)
        y = num_vars
        num_vars += 1
        add(0, 0, strength)
        add(y, y, strength)
        add(0, y, -2.0 * strength)
        prev = y
    else:
        for i in range(1, k):
            y = num_vars
            num_vars += 1
            or_gadget(prev, i, y)
            prev = y
    add(prev, prev, -lam)
    return Qubo(num_vars, coeffs, q.offset + lam)
