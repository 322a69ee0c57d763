"""Satellite communication graphs.

Builds graphs either from satellite positions (an edge wherever two
satellites are within a coverage radius) or synthetically, interpolating
between a random spanning tree (sparsity 1) and the complete graph
(sparsity 0).
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .graph import WeightedGraph, validate_partition

SPEED_OF_LIGHT_KM_S = 299792.458


def _latency(d):
    return d / SPEED_OF_LIGHT_KM_S


def _one(d):
    return 1.0


@dataclass(frozen=True)
class WeightModel:
    """Edge weighting for geometric graphs.

    ``mode="starlink"``: ``(1 - d / radius)`` plus uniform noise in
    ``[-noise_amplitude, noise_amplitude]``. ``mode="composite"``:
    ``alpha*L + beta*R + gamma*M + delta*B`` with each component a function of
    the link distance in km (latency, reliability, management cost,
    bandwidth).
    """

    mode: str = "starlink"
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    noise_amplitude: float = 1.5
    seed: int = 0
    latency: Callable[[float], float] = field(default=_latency, compare=False)
    reliability: Callable[[float], float] = field(default=_one, compare=False)
    management: Callable[[float], float] = field(default=_one, compare=False)
    bandwidth: Callable[[float], float] = field(default=_one, compare=False)

    def __post_init__(self):
        if self.mode not in ("starlink", "composite"):
            raise ValueError(f"unknown weight mode {self.mode!r}")
        if not self.noise_amplitude >= 0:
            raise ValueError("noise_amplitude must be >= 0")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
            "noise_amplitude": self.noise_amplitude,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class LinkStats:
    links_before: int
    links_after: int
    coalition_count: int
    intra_links: int = 0
    head_links: int = 0


def composite_weight(L: float, R: float, M: float, B: float, model: WeightModel) -> float:
    if model.mode != "composite":
        raise ValueError("composite_weight needs a composite WeightModel")
    for name, val in (("L", L), ("R", R), ("M", M), ("B", B)):
        if not math.isfinite(val):
            raise ValueError(f"non-finite link component {name}={val}")
    return model.alpha * L + model.beta * R + model.gamma * M + model.delta * B


def link_noise(seed: int, u: int, v: int, amplitude: float) -> float:
    """Uniform(-amplitude, amplitude) keyed by ``(seed, min(u,v), max(u,v))``."""
    if amplitude == 0:
        return 0.0
    rng = np.random.default_rng([seed, min(u, v), max(u, v)])
    return float(rng.uniform(-amplitude, amplitude))


def starlink_weight(d: float, radius: float, model: WeightModel, u: int = 0, v: int = 1) -> float | None:
    """Distance-based weight with interference noise; ``None`` when out of range."""
    if model.mode != "starlink":
        raise ValueError("starlink_weight needs a starlink WeightModel")
    if d > radius:
        return None
    if not d > 0:
        raise ValueError(f"link distance must be positive, got {d}")
    return (1.0 - d / radius) + link_noise(model.seed, u, v, model.noise_amplitude)


def build_geometric_graph(positions, radius: float, model: WeightModel = WeightModel()) -> WeightedGraph:
    """Connect every pair of satellites no farther apart than ``radius`` km.

    ``positions`` is an ``(n, 3)`` array-like or a list of state vectors.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    pos = np.array([getattr(p, "position", p) for p in positions], dtype=float).reshape(-1, 3)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    n = len(pos)
    edges = []
    for u, v in zip(*np.nonzero(np.triu(dist <= radius, k=1))):
        u, v, d = int(u), int(v), float(dist[u, v])
        if model.mode == "starlink":
            w = starlink_weight(d, radius, model, u, v)
        else:
            w = composite_weight(
                model.latency(d), model.reliability(d), model.management(d), model.bandwidth(d), model
            )
        edges.append((u, v, w))
    return WeightedGraph(n, edges)


def radius_for_mean_degree(positions, mean_degree: float) -> float:
    """Smallest radius giving at least the requested mean degree."""
    pos = np.array([getattr(p, "position", p) for p in positions], dtype=float).reshape(-1, 3)
    n = len(pos)
    if n < 2:
        raise ValueError("need at least two positions")
    need = math.ceil(mean_degree * n / 2 - 1e-9)
    iu = np.triu_indices(n, k=1)
    d = np.sort(np.linalg.norm(pos[iu[0]] - pos[iu[1]], axis=1))
    if need > len(d):
        raise ValueError(f"mean degree {mean_degree} exceeds n-1 = {n - 1}")
    return float(d[max(need, 1) - 1])


def synthetic_edge_count(n: int, sparsity: float) -> int:
    tree = n - 1
    # half-up rounding, not Python's round-half-even
    return tree + math.floor((1.0 - sparsity) * (n * (n - 1) // 2 - tree) + 0.5)


def _random_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    # decoding a uniform Pruefer sequence gives a uniform labelled tree
    if n == 2:
        return [(0, 1)]
    seq = [int(x) for x in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(a, b), max(a, b)))
    return edges


def generate_synthetic_graph(n: int, sparsity: float, seed: int = 0) -> WeightedGraph:
    """Connected graph with ``(n-1) + round((1-sparsity) * (C(n,2) - (n-1)))`` edges.

    A uniform random spanning tree is extended with distinct extra edges drawn
    uniformly; weights are i.i.d. Uniform(-1, 1).
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError(f"sparsity must lie in [0, 1], got {sparsity}")
    rng = np.random.default_rng(seed)
    tree = _random_tree(n, rng)
    m = synthetic_edge_count(n, sparsity)
    in_tree = set(tree)
    rest = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in in_tree]
    extra_idx = rng.choice(len(rest), size=m - len(tree), replace=False) if m > len(tree) else []
    pairs = sorted(tree + [rest[i] for i in extra_idx])
    weights = rng.uniform(-1.0, 1.0, size=len(pairs))
    return WeightedGraph(n, [(u, v, float(w)) for (u, v), w in zip(pairs, weights)])


def link_stats(g: WeightedGraph, p: Sequence) -> LinkStats:
    """Communication links before and after clustering.

    After clustering a coalition keeps its internal links, and each pair of
    coalitions joined by at least one original edge keeps one link between
    their cluster heads.
    """
    coalitions = validate_partition(g, p)
    owner = {}
    for k, c in enumerate(coalitions):
        for u in c:
            owner[u] = k
    intra = 0
    pairs = set()
    for u, v, _ in g.edges:
        a, b = owner[u], owner[v]
        if a == b:
            intra += 1
        else:
            pairs.add((min(a, b), max(a, b)))
    return LinkStats(g.num_edges, intra + len(pairs), len(coalitions), intra, len(pairs))
