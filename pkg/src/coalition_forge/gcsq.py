"""Top-down coalition structure generation by repeated optimal bipartition.

Every connected component of the input starts as one coalition. Each
coalition is handed to a QUBO sampler as a split problem; a split is kept
when it cuts negative total weight (the two halves are worth more than the
whole). Coalitions larger than ``kmax`` are split regardless, using the best
proper bipartition found in the sample set.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoFeasibleSampleError
from .graph import WeightedGraph, canonical_structure, connected_components, structure_value
from .qubo import VarMap, build_split_qubo
from .solvers import (
    EXHAUSTIVE_MAX_VARS,
    AnnealParams,
    AnnealSampler,
    ExhaustiveSampler,
    SampleSet,
    exhaustive_sampler,
    most_frequent_sample,
)

log = logging.getLogger(__name__)

SELECTIONS = ("lowest", "frequent")
SAMPLERS = ("anneal", "exhaustive")


@dataclass(frozen=True)
class GcsqOptions:
    kmax: int | None = None
    selection: str = "lowest"
    decompose_sides: bool = True
    sampler: str = "anneal"
    anneal: AnnealParams = field(default_factory=AnnealParams)
    fallback: bool = True

    def __post_init__(self):
        if self.kmax is not None and self.kmax < 1:
            raise ValueError(f"kmax must be >= 1, got {self.kmax}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}, got {self.selection!r}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")

    def to_dict(self) -> dict:
        return {
            "kmax": self.kmax,
            "selection": self.selection,
            "decompose_sides": self.decompose_sides,
            "sampler": self.sampler,
            "anneal": self.anneal.to_dict() if self.sampler == "anneal" else None,
            "fallback": self.fallback,
        }


@dataclass(frozen=True)
class SplitDecision:
    accepted: bool
    side_a: frozenset
    side_b: frozenset
    cut_value: float | None
    reason: str  # "improving" | "forcedBySize" | "none"

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "side_a": sorted(self.side_a),
            "side_b": sorted(self.side_b),
            "cut": self.cut_value,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class TraceEntry:
    coalition: frozenset
    decision: SplitDecision
    seconds: float
    qubo_size: int
    sampler: str

    def to_dict(self) -> dict:
        return {
            "coalition": sorted(self.coalition),
            **self.decision.to_dict(),
            "seconds": self.seconds,
            "qubo_size": self.qubo_size,
            "sampler": self.sampler,
        }


@dataclass
class GcsqResult:
    structure: list[frozenset]
    value: float
    trace: list[TraceEntry]
    options: GcsqOptions

    def to_dict(self, include_trace: bool = True) -> dict:
        out = {"value": self.value, "coalitions": canonical_structure(self.structure)}
        if include_trace:
            out["trace"] = [e.to_dict() for e in self.trace]
        out["options"] = self.options.to_dict()
        return out


def _proper_rows(s: SampleSet, vm: VarMap) -> np.ndarray:
    k = len(vm.var_to_node)
    if s.num_vars == k:
        bits_any = s.packed.any(axis=1)
        if vm.fixed_node is not None:
            return np.flatnonzero(bits_any)
        ones = np.packbits(np.ones(k, dtype=np.uint8))
        return np.flatnonzero(bits_any & ~(s.packed == ones).all(axis=1))
    # extra (auxiliary) variables: judge on the split bits only
    bits = s.bits_matrix()[:, :k]
    proper = bits.any(axis=1)
    if vm.fixed_node is None:
        proper &= ~bits.all(axis=1)
    return np.flatnonzero(proper)


def select_split(s: SampleSet, vm: VarMap, c, opts: GcsqOptions) -> SplitDecision:
    """Pick a bipartition of ``c`` from a split-QUBO sample set.

    Energies of split-QUBO samples are cut weights. A proper sample leaves
    both sides non-empty. Within the size limit only a strictly negative cut
    is accepted; above it the best proper sample is taken unconditionally.
    """
    c = frozenset(c)
    rows = _proper_rows(s, vm)
    best = None
    if len(rows):
        if opts.selection == "frequent":
            best = most_frequent_sample(s, rows)
        else:
            best = s.sample(int(rows[0]))
    oversize = opts.kmax is not None and len(c) > opts.kmax
    if best is None:
        if oversize:
            raise NoFeasibleSampleError(
                f"no proper split of oversize coalition {sorted(c)} in the sample set", coalition=c
            )
        return SplitDecision(False, c, frozenset(), None, "none")
    side_a, side_b = vm.decode(best.assignment)
    if oversize:
        return SplitDecision(True, side_a, side_b, best.energy, "forcedBySize")
    if best.energy < 0.0:
        return SplitDecision(True, side_a, side_b, best.energy, "improving")
    return SplitDecision(False, c, frozenset(), best.energy, "none")


def _coalition_seed(seed: int, c: frozenset) -> int:
    # independent of worklist order: keyed by the coalition's members only
    ss = np.random.SeedSequence(seed, spawn_key=tuple(sorted(int(u) for u in c)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sampler_for(c: frozenset, opts: GcsqOptions):
    if opts.sampler == "exhaustive":
        return ExhaustiveSampler()
    return AnnealSampler(replace(opts.anneal, seed=_coalition_seed(opts.anneal.seed, c)))


def run_gcsq(g: WeightedGraph, opts: GcsqOptions = GcsqOptions()) -> GcsqResult:
    """Split coalitions until no coalition has an improving (or required) split.

    The worklist is processed largest coalition first, ties by smallest
    member, and the trace records decisions in that order.
    """
    if g.n < 1:
        raise ValueError("graph has no nodes")
    heap: list[tuple[int, int, tuple[int, ...]]] = []

    def push(c: frozenset):
        heapq.heappush(heap, (-len(c), min(c), tuple(sorted(c))))

    for comp in connected_components(g):
        push(comp)
    final: list[frozenset] = []
    trace: list[TraceEntry] = []
    while heap:
        _, _, members = heapq.heappop(heap)
        c = frozenset(members)
        if len(c) < 2:
            final.append(c)
            continue
        q, vm = build_split_qubo(g, c, fix_symmetry=True)
        sampler = _sampler_for(c, opts)
        start = time.perf_counter()
        s = sampler.sample(q)
        elapsed = time.perf_counter() - start
        used = sampler.name
        try:
            decision = select_split(s, vm, c, opts)
        except NoFeasibleSampleError:
            if not (opts.fallback and used != "exhaustive" and q.num_vars <= EXHAUSTIVE_MAX_VARS):
                raise NoFeasibleSampleError(
                    f"no feasible split for coalition {sorted(c)} (size {len(c)} > kmax {opts.kmax}) "
                    f"after sampler {used!r}",
                    coalition=c,
                ) from None
            log.info("falling back to exhaustive sampling for coalition of size %d", len(c))
            start = time.perf_counter()
            s = exhaustive_sampler(q)
            elapsed += time.perf_counter() - start
            used = "exhaustive"
            decision = select_split(s, vm, c, opts)
        trace.append(TraceEntry(c, decision, elapsed, q.num_vars, used))
        if not decision.accepted:
            final.append(c)
            continue
        for side in (decision.side_a, decision.side_b):
            if opts.decompose_sides:
                for comp in connected_components(g, side):
                    push(comp)
            else:
                push(side)
    structure = sorted(final, key=min)
    return GcsqResult(structure, structure_value(g, structure), trace, opts)


def replay_trace(g: WeightedGraph, trace: list[TraceEntry], decompose_sides: bool = True) -> list[frozenset]:
    """Rebuild the final structure from the accepted decisions of a trace."""
    current = set(connected_components(g))
    for entry in trace:
        if not entry.decision.accepted:
            continue
        if entry.coalition not in current:
            raise ValueError(f"trace splits {sorted(entry.coalition)}, which is not a current coalition")
        current.remove(entry.coalition)
        for side in (entry.decision.side_a, entry.decision.side_b):
            current.update(connected_components(g, side) if decompose_sides else [side])
    return sorted(current, key=min)
