"""Block coordinate descent over a block-partitioned QUBO.

The solver sweeps the partition in ascending order.  For each block it
freezes everything outside, folds the frozen context into the block's
diagonal (a linear field becomes a diagonal term for binary variables),
hands the resulting small QUBO to a pluggable backend several times under
different seeds, and keeps the best candidate — but writes it back only if
it strictly lowers the block's local energy, which makes the recorded global
energy trace non-increasing for *any* backend, including noisy quantized
ones.

Local subproblems carry no constant offset: a constant cannot change a
block's minimizer, and all accounting below is in energy differences.  The
full-precision global energy is re-evaluated and recorded after every block
visit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .backends import SolveRequest
from .qubo import BlockPartition, Qubo, as_bits, qubo_energy

__all__ = [
    "AllZeros",
    "RandomInit",
    "Provided",
    "InitPolicy",
    "BcdConfig",
    "Subproblem",
    "BcdTraceRecord",
    "BcdResult",
    "BcdBackendError",
    "extract_subproblem",
    "solve_block",
    "write_back",
    "bcd_solve",
]


@dataclass(frozen=True)
class AllZeros:
    """Start from the empty assignment (the all-cash, uninvested portfolio)."""


@dataclass(frozen=True)
class RandomInit:
    """Start from uniformly random bits drawn with the given seed."""

    seed: int = 0


@dataclass(frozen=True)
class Provided:
    """Start from a caller-supplied assignment (e.g. a warm start)."""

    assignment: np.ndarray

    def __post_init__(self) -> None:
        bits = as_bits(self.assignment)
        bits.setflags(write=False)
        object.__setattr__(self, "assignment", bits)


InitPolicy = Union[AllZeros, RandomInit, Provided]


@dataclass(frozen=True)
class BcdConfig:
    """Sweep control: J global iterations, I backend runs per block visit.

    ``seed`` anchors the deterministic per-visit seed schedule: block visit
    number ``v`` (counting across iterations) uses backend seeds
    ``seed + v*I .. seed + v*I + I - 1``, so no two visits share seeds.
    ``early_stop`` ends the solve after a full sweep with no accepted update;
    it is off by default, matching a fixed-iteration protocol.
    """

    global_iters: int = 3
    repeats_per_block: int = 3
    seed: int = 0
    init: InitPolicy = field(default_factory=AllZeros)
    early_stop: bool = False

    def __post_init__(self) -> None:
        if self.global_iters < 1:
            raise ValueError("global_iters must be >= 1")
        if self.repeats_per_block < 1:
            raise ValueError("repeats_per_block must be >= 1")


@dataclass(frozen=True)
class Subproblem:
    """One block's frozen-context QUBO.

    ``q_hat`` is the block's diagonal sub-matrix plus ``diag(h)`` where
    ``h = 2 * Q[block, outside] @ x[outside]``; for block tridiagonal models
    only the two adjacent blocks contribute to ``h``, and those snapshots are
    kept in ``left_context``/``right_context``.  Differences of ``y' q_hat y``
    across candidate block vectors equal global energy differences exactly.
    """

    q_hat: np.ndarray
    block_index: int
    left_context: np.ndarray | None
    right_context: np.ndarray | None

    def __post_init__(self) -> None:
        m = np.array(self.q_hat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("q_hat must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("q_hat must be symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "q_hat", m)

    @property
    def size(self) -> int:
        return self.q_hat.shape[0]

    def local_energy(self, y) -> float:
        bits = as_bits(y, self.size).astype(float)
        return float(bits @ self.q_hat @ bits)


class BcdBackendError(RuntimeError):
    """A backend failed while solving one block; carries the block index and,
    when raised out of ``bcd_solve``, the trace recorded so far."""

    def __init__(self, block_index: int, message: str) -> None:
        super().__init__(f"block {block_index}: {message}")
        self.block_index = block_index
        self.partial_trace: tuple[BcdTraceRecord, ...] = ()


def _require_partition(q: Qubo) -> BlockPartition:
    if q.partition is None:
        raise ValueError("block coordinate descent needs a partitioned model")
    return q.partition


def extract_subproblem(q: Qubo, x, i: int) -> Subproblem:
    """Freeze everything outside block ``i`` of ``x`` into a local QUBO."""
    part = _require_partition(q)
    if not 0 <= i < len(part):
        raise IndexError(f"block index {i} out of range (m={len(part)})")
    bits = as_bits(x, q.n).astype(float)
    sl = part.block_slice(i)
    masked = bits.copy()
    masked[sl] = 0.0
    induced = 2.0 * (q.coeffs[sl, :] @ masked)
    q_hat = q.coeffs[sl, sl] + np.diag(induced)
    left = as_bits(x, q.n)[part.block_slice(i - 1)].copy() if i > 0 else None
    right = as_bits(x, q.n)[part.block_slice(i + 1)].copy() if i < len(part) - 1 else None
    return Subproblem(q_hat=q_hat, block_index=i, left_context=left, right_context=right)


def solve_block(sub: Subproblem, backend, cfg: BcdConfig, base_seed: int | None = None) -> np.ndarray:
    """Best of ``I`` backend runs on the block, judged by full-precision
    local energy (ties keep the earliest run)."""
    base = cfg.seed if base_seed is None else base_seed
    local = Qubo(sub.q_hat)
    best_energy = np.inf
    best: np.ndarray | None = None
    for run in range(cfg.repeats_per_block):
        try:
            result = backend.solve(SolveRequest(model=local, seed=base + run))
        except Exception as exc:
            raise BcdBackendError(sub.block_index, str(exc)) from exc
        candidate = as_bits(result.assignment, sub.size)
        energy = sub.local_energy(candidate)
        if energy < best_energy:
            best_energy, best = energy, candidate
    assert best is not None
    return best


def write_back(x, partition: BlockPartition, i: int, block_solution) -> np.ndarray:
    """New assignment equal to ``x`` outside block ``i`` and to
    ``block_solution`` inside it."""
    bits = as_bits(x, partition.n).copy()
    sl = partition.block_slice(i)
    sol = as_bits(block_solution, sl.stop - sl.start)
    bits[sl] = sol
    return bits


@dataclass(frozen=True)
class BcdTraceRecord:
    """Global energies bracketing one block visit (they match when the
    candidate was rejected)."""

    iteration: int
    block: int
    pre_energy: float
    post_energy: float
    wall_time: float
    backend_id: str
    seed: int
    accepted: bool


@dataclass(frozen=True)
class BcdResult:
    assignment: np.ndarray
    energy: float
    trace: tuple[BcdTraceRecord, ...]
    wall_time: float

    def __post_init__(self) -> None:
        bits = as_bits(self.assignment)
        bits.setflags(write=False)
        object.__setattr__(self, "assignment", bits)


def _initial_assignment(cfg: BcdConfig, n: int) -> np.ndarray:
    if isinstance(cfg.init, AllZeros):
        return np.zeros(n, dtype=np.int8)
    if isinstance(cfg.init, RandomInit):
        rng = np.random.default_rng(cfg.init.seed)
        return rng.integers(0, 2, size=n).astype(np.int8)
    if isinstance(cfg.init, Provided):
        return as_bits(cfg.init.assignment, n).copy()
    raise TypeError(f"unknown init policy {cfg.init!r}")


def bcd_solve(q: Qubo, backend, cfg: BcdConfig | None = None) -> BcdResult:
    """Sweep all blocks in ascending order for ``J`` global iterations.

    Each visit solves the frozen-context subproblem ``I`` times and accepts
    the best candidate only on strict local improvement, so the energy trace
    never increases and a global minimizer is a fixed point under an exact
    block backend.
    """
    cfg = cfg or BcdConfig()
    part = _require_partition(q)
    m = len(part)
    start = time.perf_counter()
    x = _initial_assignment(cfg, q.n)
    energy = qubo_energy(q, x)
    trace: list[BcdTraceRecord] = []
    for iteration in range(cfg.global_iters):
        sweep_changed = False
        for i in range(m):
            visit = iteration * m + i
            base_seed = cfg.seed + visit * cfg.repeats_per_block
            t0 = time.perf_counter()
            sub = extract_subproblem(q, x, i)
            sl = part.block_slice(i)
            incumbent_energy = sub.local_energy(x[sl])
            try:
                candidate = solve_block(sub, backend, cfg, base_seed=base_seed)
            except BcdBackendError as err:
                err.partial_trace = tuple(trace)
                raise
            pre_energy = energy
            accepted = sub.local_energy(candidate) < incumbent_energy
            if accepted:
                x = write_back(x, part, i, candidate)
                energy = qubo_energy(q, x)
                sweep_changed = True
            trace.append(
                BcdTraceRecord(
                    iteration=iteration,
                    block=i,
                    pre_energy=pre_energy,
                    post_energy=energy,
                    wall_time=time.perf_counter() - t0,
                    backend_id=getattr(backend, "name", type(backend).__name__),
                    seed=base_seed,
                    accepted=accepted,
                )
            )
        if cfg.early_stop and not sweep_changed:
            break
    return BcdResult(
        assignment=x,
        energy=energy,
        trace=tuple(trace),
        wall_time=time.perf_counter() - start,
    )
