"""Closing-price ingestion, return computation, and synthetic data generation.

Price files are delimited text with a header row ``date,asset1,asset2,...``
and one row per trading day.  A day is only usable when *every* asset has a
price, so rows with any missing cell are dropped whole.

Time indexing downstream: with ``n_t`` rebalancing intervals of ``dt``
trading days each, rebalancing time ``t`` sits at daily index ``t * dt``;
interval ``t`` owns daily steps ``t*dt .. (t+1)*dt - 1``.  The interval log
return is then exactly the sum of its daily log returns.
"""

from __future__ import annotations

import csv
import datetime
import io
import os
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PriceSeries",
    "ReturnPanel",
    "load_prices",
    "parse_prices",
    "save_prices",
    "normalize_prices",
    "append_cash_asset",
    "daily_log_returns",
    "compute_returns",
    "generate_synthetic",
    "bundled_prices_path",
    "load_bundled_prices",
]

_MISSING_MARKERS = {"", "na", "nan", "n/a", "null"}


@dataclass(frozen=True)
class PriceSeries:
    """One asset's closing prices, aligned with strictly increasing date labels."""

    asset_id: str
    prices: np.ndarray
    dates: tuple[str, ...]

    def __post_init__(self) -> None:
        p = np.array(self.prices, dtype=float)
        if p.ndim != 1:
            raise ValueError("prices must be a 1-D vector")
        if p.size and (not np.all(np.isfinite(p)) or np.any(p <= 0.0)):
            raise ValueError(f"asset {self.asset_id!r}: prices must be positive and finite")
        dates = tuple(str(d) for d in self.dates)
        if len(dates) != p.size:
            raise ValueError(
                f"asset {self.asset_id!r}: {len(dates)} dates for {p.size} prices"
            )
        for a, b in zip(dates, dates[1:]):
            if not a < b:
                raise ValueError(f"asset {self.asset_id!r}: dates not strictly increasing ({a!r} >= {b!r})")
        p.setflags(write=False)
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "dates", dates)

    def __len__(self) -> int:
        return self.prices.size


@dataclass(frozen=True)
class ReturnPanel:
    """Interval and daily log returns on a rigid time grid.

    ``interval_returns`` is n_t x n_a, ``daily_returns`` is (n_t * dt) x n_a;
    daily step ``s`` belongs to interval ``s // dt``.
    """

    interval_returns: np.ndarray
    daily_returns: np.ndarray
    dt: int
    assets: tuple[str, ...]

    def __post_init__(self) -> None:
        mu = np.array(self.interval_returns, dtype=float)
        mud = np.array(self.daily_returns, dtype=float)
        if mu.ndim != 2 or mud.ndim != 2:
            raise ValueError("return matrices must be 2-D")
        if mu.shape[1] != mud.shape[1]:
            raise ValueError("interval and daily matrices disagree on asset count")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if mud.shape[0] != mu.shape[0] * self.dt:
            raise ValueError(
                f"daily rows {mud.shape[0]} != n_t*dt = {mu.shape[0]}*{self.dt}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(mud))):
            raise ValueError("returns contain non-finite entries")
        if len(self.assets) != mu.shape[1]:
            raise ValueError("asset label count mismatch")
        mu.setflags(write=False)
        mud.setflags(write=False)
        object.__setattr__(self, "interval_returns", mu)
        object.__setattr__(self, "daily_returns", mud)
        object.__setattr__(self, "dt", int(self.dt))
        object.__setattr__(self, "assets", tuple(str(a) for a in self.assets))

    @property
    def n_t(self) -> int:
        return self.interval_returns.shape[0]

    @property
    def n_a(self) -> int:
        return self.interval_returns.shape[1]

    def daily_slice(self, t: int) -> slice:
        """Daily index range owned by interval ``t``."""
        if not 0 <= t < self.n_t:
            raise IndexError(f"interval {t} out of range")
        return slice(t * self.dt, (t + 1) * self.dt)


def parse_prices(text: str) -> list[PriceSeries]:
    """Parse delimited price text; see :func:`load_prices`."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("price file is empty") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[0].lower() != "date":
        raise ValueError("header must be 'date,asset1,asset2,...'")
    assets = header[1:]
    dates: list[str] = []
    rows: list[list[float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        cells = [cell.strip() for cell in row[1:]]
        if any(cell.lower() in _MISSING_MARKERS for cell in cells):
            continue  # not a valid trading day: some asset did not trade
        try:
            values = [float(cell) for cell in cells]
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric price") from None
        if any(not np.isfinite(v) or v <= 0.0 for v in values):
            raise ValueError(f"line {lineno}: prices must be positive and finite")
        dates.append(row[0].strip())
        rows.append(values)
    matrix = np.array(rows, dtype=float).reshape(len(rows), len(assets))
    return [
        PriceSeries(asset_id=asset, prices=matrix[:, k], dates=tuple(dates))
        for k, asset in enumerate(assets)
    ]


def load_prices(path: str | os.PathLike) -> list[PriceSeries]:
    """Load a delimited price file, one series per asset column.

    Rows missing any asset's price are dropped whole; malformed rows,
    non-positive prices, and out-of-order dates raise ``ValueError``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        return parse_prices(fh.read())


def save_prices(series: Sequence[PriceSeries], path: str | os.PathLike) -> None:
    """Write aligned series back to the delimited format."""
    _check_aligned(series)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + [s.asset_id for s in series])
        for k, date in enumerate(series[0].dates):
            writer.writerow([date] + [repr(float(s.prices[k])) for s in series])


def _check_aligned(series: Sequence[PriceSeries]) -> None:
    if not series:
        raise ValueError("no price series given")
    dates = series[0].dates
    for s in series[1:]:
        if s.dates != dates:
            raise ValueError(f"asset {s.asset_id!r} is not date-aligned with {series[0].asset_id!r}")


def normalize_prices(series: PriceSeries) -> PriceSeries:
    """Divide by the first price so every series starts at exactly 1.

    Only price ratios enter returns, so this changes nothing downstream;
    it puts assets with different currency scales on one plot axis.
    """
    if len(series) == 0:
        raise ValueError(f"asset {series.asset_id!r}: cannot normalize an empty series")
    return PriceSeries(
        asset_id=series.asset_id,
        prices=series.prices / series.prices[0],
        dates=series.dates,
    )


def append_cash_asset(
    series: Sequence[PriceSeries], asset_id: str = "CASH"
) -> list[PriceSeries]:
    """Add a constant-price asset (price 1 on every date, log return 0)."""
    series = list(series)
    if series:
        _check_aligned(series)
        dates = series[0].dates
    else:
        dates = ()
    cash = PriceSeries(asset_id=asset_id, prices=np.ones(len(dates)), dates=dates)
    return series + [cash]


def daily_log_returns(series: PriceSeries) -> np.ndarray:
    """log(P_{s+1} / P_s) for every consecutive day pair."""
    return np.diff(np.log(series.prices))


def compute_returns(
    series: Sequence[PriceSeries],
    n_t: int,
    dt: int,
    trim: str = "tail",
) -> ReturnPanel:
    """Build interval and daily log returns on an ``n_t`` x ``dt`` grid.

    Needs ``n_t * dt + 1`` prices; longer histories are trimmed per ``trim``
    ("tail" keeps the earliest window, "head" keeps the latest).  Interval
    ``t``'s return compares the boundary prices at daily indices ``t*dt``
    and ``(t+1)*dt``, which telescopes to the sum of its daily returns.
    """
    _check_aligned(series)
    if n_t <= 0 or dt <= 0:
        raise ValueError("n_t and dt must be positive")
    if trim not in ("tail", "head"):
        raise ValueError(f"trim must be 'tail' or 'head', got {trim!r}")
    need = n_t * dt + 1
    have = len(series[0])
    if have < need:
        raise ValueError(
            f"insufficient history: {have} prices, need n_t*dt+1 = {need}"
        )
    lo, hi = (0, need) if trim == "tail" else (have - need, have)
    prices = np.column_stack([s.prices[lo:hi] for s in series])
    logp = np.log(prices)
    daily = np.diff(logp, axis=0)
    boundaries = logp[:: dt]
    interval = np.diff(boundaries, axis=0)
    return ReturnPanel(
        interval_returns=interval,
        daily_returns=daily,
        dt=dt,
        assets=tuple(s.asset_id for s in series),
    )


def generate_synthetic(
    seed: int,
    n_a: int,
    days: int,
    *,
    drift=0.0004,
    volatility=0.012,
    correlation: float = 0.25,
    start_price=100.0,
    start_date: str = "2023-01-02",
) -> list[PriceSeries]:
    """Correlated geometric random walk prices, deterministic per seed.

    Daily log returns are jointly normal with per-asset ``drift`` and
    ``volatility`` (scalars or length-``n_a`` vectors) and a common pairwise
    ``correlation``.  Zero volatility degenerates to the pure drift path.
    """
    if n_a <= 0 or days <= 0:
        raise ValueError("n_a and days must be positive")
    mu = np.broadcast_to(np.asarray(drift, dtype=float), (n_a,)).copy()
    sigma = np.broadcast_to(np.asarray(volatility, dtype=float), (n_a,)).copy()
    if np.any(sigma < 0.0):
        raise ValueError("volatility must be nonnegative")
    lo = -1.0 / (n_a - 1) if n_a > 1 else -1.0
    if not lo <= correlation <= 1.0:
        raise ValueError(f"correlation must lie in [{lo:.3f}, 1]")
    p0 = np.broadcast_to(np.asarray(start_price, dtype=float), (n_a,))
    if np.any(p0 <= 0.0):
        raise ValueError("start_price must be positive")

    corr = np.full((n_a, n_a), correlation)
    np.fill_diagonal(corr, 1.0)
    cov = corr * np.outer(sigma, sigma)
    rng = np.random.default_rng(seed)
    # svd handles the degenerate cases (zero volatility, correlation 1) that
    # make the covariance merely positive semi-definite
    shocks = rng.multivariate_normal(
        mean=mu, cov=cov, size=days - 1, method="svd"
    ) if days > 1 else np.empty((0, n_a))
    logp = np.vstack([np.log(p0), np.log(p0) + np.cumsum(shocks, axis=0)])

    day0 = datetime.date.fromisoformat(start_date)
    dates = tuple((day0 + datetime.timedelta(days=k)).isoformat() for k in range(days))
    return [
        PriceSeries(asset_id=f"asset{k + 1}", prices=np.exp(logp[:, k]), dates=dates)
        for k in range(n_a)
    ]


def bundled_prices_path():
    """Path to the packaged synthetic fixture (6 assets x 529 days)."""
    return resources.files("dpoqubo").joinpath("data/synthetic_prices.csv")


def load_bundled_prices() -> list[PriceSeries]:
    """Load the packaged fixture: five random-walk assets plus constant CASH."""
    return parse_prices(bundled_prices_path().read_text(encoding="utf-8"))
