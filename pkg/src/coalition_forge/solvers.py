"""QUBO samplers and an exact coalition-structure oracle.

Two samplers share the ``Qubo -> SampleSet`` contract:

* :class:`ExhaustiveSampler` enumerates every assignment (up to 24 variables)
  and is the ground truth for every quality check.
* :class:`AnnealSampler` runs independent single-bit-flip Metropolis
  simulated annealing restarts. It stands in for an annealer returning a
  sample set of ``num_reads`` reads.

:func:`exact_partition_oracle` solves the whole coalition structure problem
by enumerating set partitions as restricted growth strings.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from typing import Protocol

import numba
import numpy as np

from .errors import EmptySampleSetError, TooLargeError
from .graph import WeightedGraph, structure_value
from .qubo import Qubo

EXHAUSTIVE_MAX_VARS = 24
ORACLE_MAX_NODES = 12
RNG_ALGORITHM = "MT19937 (numba) seeded per read from numpy SeedSequence(seed).generate_state"
THREADS_ENV = "COALITION_FORGE_THREADS"

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often too old; avoid the probe and its warning
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@dataclass(frozen=True)
class Sample:
    assignment: tuple[int, ...]
    energy: float
    occurrences: int


class SampleSet:
    """Distinct assignments with energies and occurrence counts.

    Rows are kept sorted by ascending energy, ties broken by the
    lexicographically smallest assignment. Assignments are stored bit-packed
    (``np.packbits`` row-wise, variable 0 in the most significant bit), which
    keeps byte-wise lexicographic order equal to bit-wise order.
    """

    def __init__(self, num_vars, packed, energies, counts, info=None):
        self.num_vars = int(num_vars)
        self.packed = np.ascontiguousarray(packed, dtype=np.uint8)
        self.energies = np.asarray(energies, dtype=float)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.info = dict(info or {})
        if not (len(self.packed) == len(self.energies) == len(self.counts)):
            raise ValueError("packed, energies and counts must have equal length")

    @classmethod
    def from_bits(cls, q: Qubo, bits: np.ndarray, info=None) -> "SampleSet":
        """Aggregate raw reads (one row per read) into a sorted sample set."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != q.num_vars:
            raise ValueError(f"expected reads of width {q.num_vars}, got shape {bits.shape}")
        packed = np.packbits(bits, axis=1)
        if packed.shape[1] == 0:
            uniq = np.zeros((1, 0), dtype=np.uint8)
            counts = np.array([len(bits)])
        else:
            uniq, counts = np.unique(packed, axis=0, return_counts=True)
        rows = np.unpackbits(uniq, axis=1, count=q.num_vars)
        energies = q.energies(rows)
        # np.unique returns rows in lexicographic order; a stable sort keeps it for ties
        order = np.argsort(energies, kind="stable")
        return cls(q.num_vars, uniq[order], energies[order], counts[order], info)

    def __len__(self):
        return len(self.energies)

    def bits(self, i: int) -> np.ndarray:
        return np.unpackbits(self.packed[i], count=self.num_vars)

    def bits_matrix(self, rows=None) -> np.ndarray:
        packed = self.packed if rows is None else self.packed[rows]
        return np.unpackbits(packed, axis=1, count=self.num_vars)

    def sample(self, i: int) -> Sample:
        return Sample(tuple(int(b) for b in self.bits(i)), float(self.energies[i]), int(self.counts[i]))

    def __getitem__(self, i: int) -> Sample:
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return self.sample(i)

    def __iter__(self):
        for i in range(len(self)):
            yield self.sample(i)

    def first(self) -> Sample:
        if len(self) == 0:
            raise EmptySampleSetError("sample set is empty")
        return self.sample(0)

    @property
    def total_reads(self) -> int:
        return int(self.counts.sum())

    def is_sorted(self) -> bool:
        for i in range(len(self) - 1):
            e0, e1 = self.energies[i], self.energies[i + 1]
            if e0 > e1:
                return False
            if e0 == e1 and bytes(self.packed[i]) >= bytes(self.packed[i + 1]):
                return False
        return True

    def to_list(self) -> list[dict]:
        out = []
        for i in range(len(self)):
            bits = "".join("1" if b else "0" for b in self.bits(i))
            out.append({"bits": bits, "energy": float(self.energies[i]), "count": int(self.counts[i])})
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_list(cls, rows: list[dict], num_vars: int | None = None) -> "SampleSet":
        if num_vars is None:
            num_vars = len(rows[0]["bits"]) if rows else 0
        bits = np.array([[int(ch) for ch in r["bits"]] for r in rows], dtype=np.uint8).reshape(
            len(rows), num_vars
        )
        return cls(
            num_vars,
            np.packbits(bits, axis=1),
            [r["energy"] for r in rows],
            [r["count"] for r in rows],
        )


def most_frequent_sample(s: SampleSet, rows=None) -> Sample:
    """Sample with the most occurrences; ties go to lower energy, then smaller assignment.

    ``rows`` optionally restricts the choice to a subset of row indices.
    """
    idx = np.arange(len(s)) if rows is None else np.asarray(rows, dtype=np.int64)
    if len(idx) == 0:
        raise EmptySampleSetError("no samples to choose from")
    # rows are sorted by (energy, assignment), so the first maximum wins ties
    return s.sample(int(idx[np.argmax(s.counts[idx])]))


class Sampler(Protocol):
    name: str

    def sample(self, q: Qubo) -> SampleSet: ...


class ExhaustiveSampler:
    name = "exhaustive"

    def __init__(self, max_vars: int = EXHAUSTIVE_MAX_VARS, chunk: int = 1 << 18):
        self.max_vars = max_vars
        self.chunk = chunk

    def sample(self, q: Qubo) -> SampleSet:
        return exhaustive_sampler(q, max_vars=self.max_vars, chunk=self.chunk)


def exhaustive_sampler(q: Qubo, max_vars: int = EXHAUSTIVE_MAX_VARS, chunk: int = 1 << 18) -> SampleSet:
    """Every assignment once, sorted; the global minimum is row 0."""
    k = q.num_vars
    if k > min(max_vars, EXHAUSTIVE_MAX_VARS):
        raise TooLargeError(f"exhaustive sampling refused for {k} variables (cap {max_vars})")
    total = 1 << k
    upper = q.upper_matrix()
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    nbytes = (k + 7) // 8
    energies = np.empty(total)
    packed = np.empty((total, nbytes), dtype=np.uint8)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
        x = bits.astype(float)
        energies[start : start + len(idx)] = np.einsum("ij,ij->i", x @ upper, x) + q.offset
        packed[start : start + len(idx)] = np.packbits(bits, axis=1)
    # index order is lexicographic order, so a stable sort settles energy ties correctly
    order = np.argsort(energies, kind="stable")
    return SampleSet(k, packed[order], energies[order], np.ones(total, dtype=np.int64), {"sampler": "exhaustive"})


@dataclass(frozen=True)
class AnnealParams:
    num_reads: int = 1000
    sweeps_per_read: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.sweeps_per_read < 1:
            raise ValueError("sweeps_per_read must be >= 1")
        if not 0 < self.beta_start < self.beta_end:
            raise ValueError("need 0 < beta_start < beta_end")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def betas(self) -> np.ndarray:
        if self.sweeps_per_read == 1:
            return np.array([self.beta_end])
        return np.geomspace(self.beta_start, self.beta_end, self.sweeps_per_read)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = "geometric"
        d["rng"] = RNG_ALGORITHM
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "AnnealParams":
        # "schedule" and "rng" are provenance written by to_dict, not settings
        return cls(**{k: v for k, v in data.items() if k not in ("schedule", "rng")})


def configure_threads() -> int:
    """Apply the thread cap from ``COALITION_FORGE_THREADS`` (0 or unset = auto)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        want = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    limit = numba.config.NUMBA_NUM_THREADS
    threads = limit if want <= 0 else min(want, limit)
    numba.set_num_threads(threads)
    return threads


@numba.njit(parallel=True, cache=True)
def _anneal_kernel(linear, indptr, indices, couplings, betas, seeds):
    num_reads = seeds.shape[0]
    n = linear.shape[0]
    out = np.zeros((num_reads, n), dtype=np.uint8)
    for r in numba.prange(num_reads):
        # per-thread RNG state reseeded per read: results do not depend on scheduling
        np.random.seed(seeds[r])
        x = np.empty(n, dtype=np.uint8)
        for i in range(n):
            x[i] = 1 if np.random.random() < 0.5 else 0
        field = linear.copy()
        for i in range(n):
            if x[i]:
                for p in range(indptr[i], indptr[i + 1]):
                    field[indices[p]] += couplings[p]
        for s in range(betas.shape[0]):
            beta = betas[s]
            for i in range(n):
                sign = 1.0 - 2.0 * x[i]
                delta = sign * field[i]
                if delta <= 0.0 or np.random.random() < np.exp(-beta * delta):
                    x[i] = 1 - x[i]
                    for p in range(indptr[i], indptr[i + 1]):
                        field[indices[p]] += sign * couplings[p]
        out[r, :] = x
    return out


def _csr_couplings(q: Qubo):
    n = q.num_vars
    linear = np.zeros(n)
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (i, j), c in q.coeffs.items():
        if i == j:
            linear[i] += c
        elif c != 0.0:
            nbrs[i].append((j, c))
            nbrs[j].append((i, c))
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(nbrs[i])
    indices = np.empty(indptr[-1], dtype=np.int64)
    couplings = np.empty(indptr[-1])
    for i in range(n):
        row = sorted(nbrs[i])
        indices[indptr[i] : indptr[i + 1]] = [j for j, _ in row]
        couplings[indptr[i] : indptr[i + 1]] = [c for _, c in row]
    return linear, indptr, indices, couplings


def read_seeds(seed: int, num_reads: int) -> np.ndarray:
    """Per-read 32-bit seeds; read ``r`` depends only on ``(seed, r)``."""
    return np.random.SeedSequence(seed).generate_state(num_reads, dtype=np.uint32).astype(np.int64)


def anneal_sampler(q: Qubo, params: AnnealParams = AnnealParams()) -> SampleSet:
    """Simulated annealing with a geometric inverse-temperature schedule.

    Each read starts from a uniformly random state and performs
    ``sweeps_per_read`` in-order sweeps of single-bit Metropolis flips. Local
    fields are updated incrementally, so a flip costs O(degree).
    """
    if q.num_vars < 1:
        raise ValueError("annealing needs at least one variable")
    configure_threads()
    linear, indptr, indices, couplings = _csr_couplings(q)
    bits = _anneal_kernel(linear, indptr, indices, couplings, params.betas(), read_seeds(params.seed, params.num_reads))
    return SampleSet.from_bits(q, bits, {"sampler": "anneal", "params": params.to_dict()})


class AnnealSampler:
    name = "anneal"

    def __init__(self, params: AnnealParams = AnnealParams()):
        self.params = params

    def sample(self, q: Qubo) -> SampleSet:
        return anneal_sampler(q, self.params)


def exact_partition_oracle(g: WeightedGraph, kmax: int | None = None) -> tuple[list[frozenset], float]:
    """Best coalition structure by enumerating all set partitions.

    Partitions are visited as restricted growth strings in lexicographic order
    with the value accumulated incrementally; a later partition replaces the
    incumbent only when strictly better (by more than 1e-12), so ties resolve
    to the smallest string. Blocks larger than ``kmax`` are pruned.
    """
    n = g.n
    if n > ORACLE_MAX_NODES:
        raise TooLargeError(f"exact oracle refused for {n} nodes (cap {ORACLE_MAX_NODES})")
    if kmax is not None and kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    if n == 0:
        return [], 0.0
    cap = n if kmax is None else kmax
    w = g.weight_matrix().tolist()
    blocks: list[list[int]] = []
    rgs = [0] * n
    best = {"value": -np.inf, "rgs": None}

    def visit(i: int, value: float):
        if i == n:
            if value > best["value"] + 1e-12:
                best["value"] = value
                best["rgs"] = list(rgs)
            return
        row = w[i]
        for b, members in enumerate(blocks):
            if len(members) >= cap:
                continue
            gain = 0.0
            for m in members:
                gain += row[m]
            members.append(i)
            rgs[i] = b
            visit(i + 1, value + gain)
            members.pop()
        blocks.append([i])
        rgs[i] = len(blocks) - 1
        visit(i + 1, value)
        blocks.pop()

    visit(0, 0.0)
    groups: dict[int, list[int]] = {}
    for u, b in enumerate(best["rgs"]):
        groups.setdefault(b, []).append(u)
    structure = [frozenset(groups[b]) for b in sorted(groups)]
    return structure, structure_value(g, structure)
