"""Coefficient conditioning for signed 8-bit solver targets.

Three stages, usable independently:

1. :func:`dynamic_range` measures, in bits, how far apart the largest and
   smallest nonzero absolute differences between coefficient values sit.
   A model whose dynamic range exceeds the target word length loses its
   weakest structure when quantized.
2. :func:`reduce_dynamic_range` performs conservative single-entry tuning:
   one field coefficient at a time is nudged toward zero, and the step is
   kept only when the dynamic range strictly drops *and* the model's set of
   ground states still contains a ground state of the original model
   (checked exhaustively for small models, by multistart local search
   agreement otherwise).
3. :func:`quantize_int8` maps coefficients to integers in [-128, 127] via
   scale-round-clip with the maximum absolute coefficient pinned to 127.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qubo import BlockPartition, IsingModel, as_spins

__all__ = [
    "CoefficientSet",
    "DynamicRange",
    "TuningStep",
    "TuningResult",
    "QuantizedIsing",
    "QuantizationLossReport",
    "coefficient_set",
    "dynamic_range",
    "reduce_dynamic_range",
    "quantize_int8",
    "quantized_energy",
    "quantization_loss_report",
]

# Entry references: ("h", i) for a field term, ("J", i, j) with i < j for a
# coupling term.
EntryRef = tuple


@dataclass(frozen=True)
class CoefficientSet:
    """Flat view of every model coefficient with a back-reference per value.

    ``values[k]`` came from model entry ``refs[k]``; each field appears once
    and each unordered coupling pair appears once, so the back-references are
    a bijection onto the model's free coefficients.
    """

    values: np.ndarray
    refs: tuple[EntryRef, ...]

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        if v.shape[0] != len(self.refs):
            raise ValueError("values and refs must have equal length")
        object.__setattr__(self, "values", v)


def coefficient_set(model: IsingModel) -> CoefficientSet:
    """Collect all field and coupling coefficients of an Ising model."""
    n = model.n
    iu = np.triu_indices(n, k=1)
    values = np.concatenate([model.linear, model.quadratic[iu]])
    refs: list[EntryRef] = [("h", i) for i in range(n)]
    refs.extend(("J", int(i), int(j)) for i, j in zip(*iu))
    return CoefficientSet(values=values, refs=tuple(refs))


@dataclass(frozen=True)
class DynamicRange:
    """Log-ratio of extreme nonzero differences between coefficient values.

    ``bits = log2(largest_diff / smallest_diff)``.  ``degenerate`` is set
    when every value is equal, in which case ``bits`` is defined as 0.
    """

    bits: float
    largest_diff: float
    smallest_diff: float
    degenerate: bool = False


def dynamic_range(x) -> DynamicRange:
    """Measure the dynamic range of a coefficient collection in bits.

    Differences are taken between *distinct* values, so the largest is the
    range and the smallest is the tightest gap between adjacent sorted
    values; zero values participate, zero differences never occur.
    """
    values = x.values if isinstance(x, CoefficientSet) else np.asarray(x, dtype=float)
    distinct = np.unique(values)
    if distinct.size < 2:
        return DynamicRange(bits=0.0, largest_diff=0.0, smallest_diff=0.0, degenerate=True)
    largest = float(distinct[-1] - distinct[0])
    smallest = float(np.diff(distinct).min())
    return DynamicRange(
        bits=math.log2(largest / smallest),
        largest_diff=largest,
        smallest_diff=smallest,
    )


@dataclass(frozen=True)
class TuningStep:
    """One accepted single-entry move."""

    entry: EntryRef
    old_value: float
    new_value: float
    bits_before: float
    bits_after: float
    kind: str  # "shrink-extreme" | "widen-gap"


@dataclass(frozen=True)
class TuningResult:
    model: IsingModel
    steps: tuple[TuningStep, ...]


# ---------------------------------------------------------------------------
# ground-state bookkeeping used by the tuning accept test

_EXHAUSTIVE_LIMIT = 12


def _spin_table(n: int) -> np.ndarray:
    """All 2^n spin vectors; row c encodes bit i of c as spin 1 - 2*bit."""
    count = 1 << n
    counters = np.arange(count, dtype=np.uint32)
    bits = (counters[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _all_energies(model: IsingModel, spins: np.ndarray) -> np.ndarray:
    z = spins.astype(float)
    return (
        model.offset
        + z @ model.linear
        + 0.5 * np.einsum("ij,jk,ik->i", z, model.quadratic, z)
    )


def _argmin_rows(energies: np.ndarray) -> frozenset[int]:
    emin = energies.min()
    tol = 1e-9 * (1.0 + abs(emin))
    return frozenset(np.flatnonzero(energies <= emin + tol).tolist())


def _greedy_descent(model: IsingModel, z0: np.ndarray) -> np.ndarray:
    """Steepest single-flip descent to a local minimum."""
    z = z0.astype(float).copy()
    for _ in range(10 * model.n + 10):
        local_field = model.linear + model.quadratic @ z
        deltas = -2.0 * z * local_field
        best = int(np.argmin(deltas))
        if deltas[best] >= -1e-12:
            break
        z[best] = -z[best]
    return z.astype(np.int8)


class _MinimizerCheck:
    """Accept test: does a candidate model keep a ground state of the original?

    Small models are settled exhaustively.  Larger models fall back to a
    sampled agreement test: the same multistart greedy descents are run on
    both models and the candidate passes when one of its best-found states is
    also a best-found state of the original.
    """

    def __init__(self, original: IsingModel, seed: int, starts: int) -> None:
        self.n = original.n
        self.exhaustive = self.n <= _EXHAUSTIVE_LIMIT
        if self.exhaustive:
            self._spins = _spin_table(self.n)
            self._original_argmin = _argmin_rows(_all_energies(original, self._spins))
        else:
            rng = np.random.default_rng(seed)
            self._starts = (1 - 2 * rng.integers(0, 2, size=(starts, self.n))).astype(
                np.int8
            )
            states = [_greedy_descent(original, s) for s in self._starts]
            energies = np.array(
                [_ising_energy_fast(original, s) for s in states]
            )
            keep = _argmin_rows(energies)
            self._original_best = {states[i].tobytes() for i in keep}

    def passes(self, candidate: IsingModel) -> bool:
        if self.exhaustive:
            argmin = _argmin_rows(_all_energies(candidate, self._spins))
            return bool(argmin & self._original_argmin)
        states = [_greedy_descent(candidate, s) for s in self._starts]
        energies = np.array([_ising_energy_fast(candidate, s) for s in states])
        keep = _argmin_rows(energies)
        return any(states[i].tobytes() in self._original_best for i in keep)


def _ising_energy_fast(model: IsingModel, z: np.ndarray) -> float:
    zf = z.astype(float)
    return model.offset + float(model.linear @ zf) + 0.5 * float(
        zf @ model.quadratic @ zf
    )


# ---------------------------------------------------------------------------
# candidate moves

def _linear_entries_with_value(model: IsingModel, value: float) -> list[int]:
    return np.flatnonzero(model.linear == value).tolist()


def _with_linear(model: IsingModel, index: int, new_value: float) -> IsingModel:
    linear = np.array(model.linear, dtype=float)
    linear[index] = new_value
    return IsingModel(linear=linear, quadratic=model.quadratic, offset=model.offset)


def _shrink_extreme_moves(model: IsingModel, values: np.ndarray):
    """Shrink the largest-magnitude field entry to the runner-up magnitude."""
    mags = np.unique(np.abs(values))
    if mags.size < 2:
        return
    top, runner_up = float(mags[-1]), float(mags[-2])
    for signed in (top, -top):
        for i in _linear_entries_with_value(model, signed):
            yield ("shrink-extreme", i, math.copysign(runner_up, signed))


def _widen_gap_moves(model: IsingModel, values: np.ndarray):
    """Move one endpoint of the tightest gap toward zero until the gap equals
    the second-tightest."""
    distinct = np.unique(values)
    if distinct.size < 3:
        return
    gaps = np.diff(distinct)
    gap_sizes = np.unique(gaps)
    if gap_sizes.size < 2:
        return
    second_tightest = float(gap_sizes[1])
    k = int(np.argmin(gaps))
    lo, hi = float(distinct[k]), float(distinct[k + 1])
    if lo >= 0.0:
        # both endpoints nonnegative: pull the lower one toward zero
        target = hi - second_tightest
        lower_neighbour = float(distinct[k - 1]) if k > 0 else None
        if target >= 0.0 and (lower_neighbour is None or target > lower_neighbour):
            for i in _linear_entries_with_value(model, lo):
                yield ("widen-gap", i, target)
    elif hi <= 0.0:
        # both endpoints nonpositive: push the upper one toward zero
        target = lo + second_tightest
        upper_neighbour = float(distinct[k + 2]) if k + 2 < distinct.size else None
        if target <= 0.0 and (upper_neighbour is None or target < upper_neighbour):
            for i in _linear_entries_with_value(model, hi):
                yield ("widen-gap", i, target)
    # gap straddling zero: no move toward zero can widen it


def reduce_dynamic_range(
    model: IsingModel,
    budget: int = 100,
    *,
    check_seed: int = 0,
    check_starts: int = 64,
) -> TuningResult:
    """Lower a model's coefficient dynamic range by single-entry tuning.

    Up to ``budget`` accepted steps are applied.  Each step rewrites one
    *field* coefficient toward zero — either shrinking the extreme-magnitude
    entry to the runner-up magnitude, or widening the tightest value gap to
    the second-tightest — and is kept only when the dynamic range strictly
    decreases and the ground-state check against the *input* model passes.
    With no admissible move the input is returned unchanged.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    check = _MinimizerCheck(model, seed=check_seed, starts=check_starts) if budget else None
    current = model
    steps: list[TuningStep] = []
    while len(steps) < budget:
        values = coefficient_set(current).values
        before = dynamic_range(values)
        if before.degenerate:
            break
        accepted: TuningStep | None = None
        for kind, index, new_value in list(_shrink_extreme_moves(current, values)) + list(
            _widen_gap_moves(current, values)
        ):
            old_value = float(current.linear[index])
            candidate = _with_linear(current, index, new_value)
            after = dynamic_range(coefficient_set(candidate).values)
            if after.bits >= before.bits:
                continue
            if not check.passes(candidate):
                continue
            accepted = TuningStep(
                entry=("h", index),
                old_value=old_value,
                new_value=new_value,
                bits_before=before.bits,
                bits_after=after.bits,
                kind=kind,
            )
            current = candidate
            break
        if accepted is None:
            break
        steps.append(accepted)
    return TuningResult(model=current, steps=tuple(steps))


# ---------------------------------------------------------------------------
# int8 quantization

@dataclass(frozen=True)
class QuantizedIsing:
    """Ising model with int8 coefficients and the scale used to produce them.

    ``scale = 127 / alpha`` where ``alpha`` is the source model's largest
    absolute coefficient; dividing integer energies by ``scale`` recovers
    approximate source-model energies (the source offset is not carried).
    """

    linear: np.ndarray
    quadratic: np.ndarray
    scale: float
    degenerate: bool = False
    provenance: tuple[TuningStep, ...] = field(default=())
    partition: BlockPartition | None = None

    def __post_init__(self) -> None:
        lin = np.array(self.linear, dtype=np.int8)
        quad = np.array(self.quadratic, dtype=np.int8)
        if lin.ndim != 1 or quad.shape != (lin.size, lin.size):
            raise ValueError("inconsistent coefficient shapes")
        if not np.array_equal(quad, quad.T) or np.any(np.diag(quad) != 0):
            raise ValueError("quadratic must be symmetric with zero diagonal")
        if self.partition is not None and self.partition.n != lin.size:
            raise ValueError(
                f"partition covers {self.partition.n} indices, model has {lin.size}"
            )
        lin.setflags(write=False)
        quad.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def n(self) -> int:
        return self.linear.shape[0]


def quantize_int8(
    model: IsingModel, provenance: tuple[TuningStep, ...] = ()
) -> QuantizedIsing:
    """Scale-round-clip all coefficients into signed 8-bit integers.

    Each coefficient maps to ``clip(round(127 * x / alpha), -128, 127)`` with
    ``alpha`` the largest absolute coefficient, so the extreme entry lands on
    exactly +/-127 and anything below ``alpha / 254`` collapses to zero.
    Ties round half-to-even.  An all-zero model quantizes to zeros with scale
    1 and the degenerate flag set.
    """
    values = coefficient_set(model).values
    alpha = float(np.abs(values).max()) if values.size else 0.0
    n = model.n
    if alpha == 0.0:
        return QuantizedIsing(
            linear=np.zeros(n, dtype=np.int8),
            quadratic=np.zeros((n, n), dtype=np.int8),
            scale=1.0,
            degenerate=True,
            provenance=provenance,
            partition=model.partition,
        )
    lin = np.clip(np.round(127.0 * (model.linear / alpha)), -128, 127)
    quad = np.clip(np.round(127.0 * (model.quadratic / alpha)), -128, 127)
    return QuantizedIsing(
        linear=lin.astype(np.int8),
        quadratic=quad.astype(np.int8),
        scale=127.0 / alpha,
        provenance=provenance,
        partition=model.partition,
    )


def quantized_energy(qm: QuantizedIsing, z) -> int:
    """Integer-unit energy of a spin assignment (pairs counted once)."""
    spins = as_spins(z, qm.n).astype(np.int64)
    pair_twice = int(spins @ qm.quadratic.astype(np.int64) @ spins)
    return int(qm.linear.astype(np.int64) @ spins) + pair_twice // 2


@dataclass(frozen=True)
class QuantizationLossReport:
    """Where quantization destroyed structure.

    ``zeroed_intra``/``zeroed_inter`` split the zeroed couplings by whether
    the pair crosses a block boundary; they are None when no partition was
    supplied.  Field coefficients count as intra-block.
    """

    zeroed_total: int
    zeroed_intra: int | None
    zeroed_inter: int | None
    max_relative_error: float


def quantization_loss_report(
    model: IsingModel,
    quantized: QuantizedIsing,
    partition: BlockPartition | None = None,
) -> QuantizationLossReport:
    """Count nonzero source coefficients whose int8 image is zero, and the
    worst relative reconstruction error over nonzero source coefficients.

    The intra/inter split uses ``partition`` if given, else the partition
    carried by either model.
    """
    if model.n != quantized.n:
        raise ValueError("model and quantized sizes differ")
    if partition is None:
        partition = quantized.partition or model.partition
    n = model.n
    iu = np.triu_indices(n, k=1)
    src = np.concatenate([model.linear, model.quadratic[iu]])
    img = np.concatenate(
        [quantized.linear.astype(float), quantized.quadratic[iu].astype(float)]
    )
    nonzero = src != 0.0
    zeroed = nonzero & (img == 0.0)
    total = int(zeroed.sum())
    if partition is None:
        intra = inter = None
    else:
        block_of = np.empty(n, dtype=int)
        for k, (start, stop) in enumerate(partition.blocks):
            block_of[start:stop] = k
        crosses = np.concatenate(
            [np.zeros(n, dtype=bool), block_of[iu[0]] != block_of[iu[1]]]
        )
        inter = int((zeroed & crosses).sum())
        intra = total - inter
    if nonzero.any() and not quantized.degenerate:
        recon = img / quantized.scale
        rel = np.abs(src[nonzero] - recon[nonzero]) / np.abs(src[nonzero])
        max_rel = float(rel.max())
    else:
        max_rel = 0.0
    return QuantizationLossReport(
        zeroed_total=total,
        zeroed_intra=intra,
        zeroed_inter=inter,
        max_relative_error=max_rel,
    )
