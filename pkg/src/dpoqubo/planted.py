"""Constructed portfolio instances whose coefficient scales are deliberately
imbalanced across time blocks.

Why this exists: int8 quantization divides every coefficient by the single
largest one.  If one time block's budget penalty dwarfs the others', a
*whole-model* quantization flattens the weak blocks and the inter-block
couplings to zero — the solver then has no incentive to fund the weak
intervals and returns budget-infeasible portfolios.  Quantizing one block
subproblem at a time keeps each block's structure at full int8 resolution.
These planted instances make that contrast reproducible and testable.

The construction keeps the budget K at exactly half the representable total
per interval, which makes the budget penalty's spin-space linear fields
vanish: each block is then pure couplings, so single-entry (field-only)
dynamic-range tuning cannot dissolve the planted separation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DpoConfig, PortfolioAllocation, decode
from .qubo import BlockPartition, Qubo

__all__ = ["PlantedInstance", "make_scale_separated_qubo"]


@dataclass(frozen=True)
class PlantedInstance:
    """A scale-separated model plus the bookkeeping to judge its solutions."""

    qubo: Qubo
    config: DpoConfig
    rho_schedule: tuple[float, ...]
    interval_returns: np.ndarray

    def decode(self, x) -> PortfolioAllocation:
        return decode(x, self.config)


def make_scale_separated_qubo(
    seed: int,
    n_t: int = 3,
    n_a: int = 2,
    n_r: int = 2,
    rho: float = 1.0,
    growth: float = 20.0,
    coupling_rate: float = 1e-3,
    return_scale: float = 0.02,
) -> PlantedInstance:
    """Portfolio QUBO with per-interval budget weights ``rho * growth**t``.

    The budget is fixed at ``n_a * (2**n_r - 1) / 2`` capital units (requires
    ``n_a * (2**n_r - 1)`` even).  Interval returns are random with magnitude
    ``return_scale * rho_t``, so every block is internally well-conditioned;
    adjacent blocks couple through a turnover penalty of ``coupling_rate *
    rho``, orders of magnitude below the last block's budget scale.  With the
    defaults the inter/intra coefficient ratio is far below 1/255, the int8
    cliff for whole-model quantization.
    """
    if n_t < 2:
        raise ValueError("need at least two intervals to have inter-block structure")
    if growth <= 1.0:
        raise ValueError("growth must exceed 1 to separate the block scales")
    representable = n_a * (2**n_r - 1)
    if representable % 2:
        raise ValueError("n_a * (2^n_r - 1) must be even so the budget can sit at half")
    budget = representable // 2
    config = DpoConfig(
        n_t=n_t, n_a=n_a, n_r=n_r, budget=budget,
        nu=coupling_rate, lam=1.0, rho=rho, gamma=0.0, dt=2,
    )
    rng = np.random.default_rng(seed)
    rho_schedule = tuple(float(rho * growth**t) for t in range(n_t))
    # per-block return magnitudes track the block's penalty scale so the
    # fields stay visible under per-block quantization
    mu = np.array(
        [
            rng.uniform(0.5, 1.5, size=n_a)
            * rng.choice([-1.0, 1.0], size=n_a)
            * return_scale
            * rho_schedule[t]
            for t in range(n_t)
        ]
    )
    tc = coupling_rate * rho

    # weight-space quadratic form of the negated score, then bit expansion
    # (same layout as the standard encoder, but with per-interval rho)
    dim = n_t * n_a
    m = np.zeros((dim, dim))
    c = np.zeros(dim)
    const = 0.0
    for t in range(n_t):
        sl = slice(t * n_a, (t + 1) * n_a)
        m[sl, sl] += rho_schedule[t] * np.ones((n_a, n_a))
        m[sl, sl] += tc * (2.0 if t < n_t - 1 else 1.0) * np.eye(n_a)
        if t > 0:
            prev = slice((t - 1) * n_a, t * n_a)
            m[prev, sl] += -tc * np.eye(n_a)
            m[sl, prev] += -tc * np.eye(n_a)
        c[sl] += -mu[t]
        c[sl] += -2.0 * rho_schedule[t] * budget
        const += rho_schedule[t] * budget**2
    powers = 2.0 ** np.arange(n_r)
    expand = np.kron(np.eye(dim), powers[None, :])
    coeffs = expand.T @ m @ expand + np.diag(expand.T @ c)
    part = BlockPartition.from_sizes([n_a * n_r] * n_t)
    qubo = Qubo.from_dense(coeffs, offset=const, partition=part)
    return PlantedInstance(
        qubo=qubo,
        config=config,
        rho_schedule=rho_schedule,
        interval_returns=mu,
    )
