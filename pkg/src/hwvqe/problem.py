"""Cost models and data plumbing for weight-constrained optimization.

Two problem families share the qubit layout of :mod:`hwvqe.qsim` (asset/node i
lives on bit i, so the reordered "rightmost" assets occupy the most significant
bits):

* **Portfolio selection** — minimize ``q * x^T A x - mu^T x`` over bitstrings
  of Hamming weight equal to the budget (unit prices, so the budget constrains
  the number of selected assets). A spin form obtained by ``x = (1 - z)/2`` is
  kept alongside for cross-checking.
* **Graph bisection** — minimize the cut weight of an equal split, plus a
  constant offset; the symmetric solution pair may be broken by pinning the
  top node into the 1-side.

Data enters either from a closing-price CSV, or from seeded generators
(factor-model price paths for assets, Bernoulli edges with uniform weights for
graphs), both deterministic under their seeds.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .ansatz import DickeSpec
from .qsim import BasisState, hamming_weight, hamming_weight_array

__all__ = [
    "PortfolioProblem",
    "IsingModel",
    "BisectionProblem",
    "ReducedBisection",
    "cost_binary",
    "cost_binary_batch",
    "to_ising",
    "reorder",
    "reverse_assets",
    "cost_bisection",
    "cost_bisection_batch",
    "reorder_bisection",
    "reverse_nodes",
    "ingest_csv",
    "synth_assets",
    "synth_price_paths",
    "synth_graph",
    "save_portfolio",
    "load_portfolio",
    "save_graph",
    "load_graph",
    "dicke_spec_for",
    "batch_evaluator",
    "reverse_problem",
    "bits_matrix",
]

BasisLike = Union[int, BasisState]

COST_MODES = ("full", "covariance", "returns")


def _as_bits(x: BasisLike) -> int:
    return x.bits if isinstance(x, BasisState) else int(x)


def bits_matrix(states: np.ndarray, n: int) -> np.ndarray:
    """Row per state, column i = bit i (asset/node i), as float64."""
    s = np.asarray(states, dtype=np.int64)
    return ((s[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(np.float64)


# ---------------------------------------------------------------------------
# portfolio
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PortfolioProblem:
    """Budget-constrained mean-variance selection with unit asset prices."""

    n: int
    q: float
    A: np.ndarray
    mu: np.ndarray
    budget: int
    permutation: tuple[int, ...] = ()  # current index -> index at construction
    prices: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=np.float64)
        mu = np.asarray(self.mu, dtype=np.float64)
        if A.shape != (self.n, self.n):
            raise ValueError(f"covariance shape {A.shape} != ({self.n}, {self.n})")
        if mu.shape != (self.n,):
            raise ValueError(f"return vector shape {mu.shape} != ({self.n},)")
        if not np.allclose(A, A.T, atol=1e-9):
            raise ValueError("covariance matrix is not symmetric")
        if self.q <= 0:
            raise ValueError(f"risk level must be positive, got {self.q}")
        if not 0 <= self.budget <= self.n:
            raise ValueError(f"budget {self.budget} outside 0..{self.n}")
        A.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "mu", mu)
        perm = tuple(self.permutation) if self.permutation else tuple(range(self.n))
        if sorted(perm) != list(range(self.n)):
            raise ValueError("permutation is not a permutation of 0..n-1")
        object.__setattr__(self, "permutation", perm)
        prices = np.ones(self.n) if self.prices is None else np.asarray(self.prices, dtype=np.float64)
        if prices.shape != (self.n,) or not np.all(prices == 1.0):
            raise ValueError("asset prices are fixed to the all-ones vector")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)


@dataclass(frozen=True)
class IsingModel:
    """Spin form of a portfolio cost under ``x_i = (1 - z_i)/2``.

    The constant is carried for reconstructing binary energies but plays no
    role in optimization.
    """

    q_prime: float
    mu_prime: np.ndarray
    constant: float
    A: np.ndarray

    def energy_spin(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=np.float64)
        return float(self.q_prime * z @ self.A @ z - self.mu_prime @ z)


def cost_binary(p: PortfolioProblem, x: BasisLike, mode: str = "full") -> float:
    """``q x^T A x - mu^T x`` (or one of its two single-term variants)."""
    bits = _as_bits(x)
    if hamming_weight(bits) != p.budget:
        raise ValueError(
            f"bitstring {bits:0{p.n}b} has weight {hamming_weight(bits)}, budget is {p.budget}"
        )
    return float(cost_binary_batch(p, np.array([bits], dtype=np.int64), mode)[0])


def cost_binary_batch(p: PortfolioProblem, states: np.ndarray, mode: str = "full") -> np.ndarray:
    """Vectorized cost over an int64 array of basis states (weights trusted)."""
    if mode not in COST_MODES:
        raise ValueError(f"mode {mode!r} not one of {COST_MODES}")
    B = bits_matrix(states, p.n)
    if mode == "returns":
        return -(B @ p.mu)
    quad = np.einsum("ki,ij,kj->k", B, p.A, B, optimize=True)
    if mode == "covariance":
        return quad
    return p.q * quad - B @ p.mu


def to_ising(p: PortfolioProblem) -> IsingModel:
    ones = np.ones(p.n)
    mu_prime = 0.5 * (p.q * (p.A @ ones) - p.mu)
    constant = float((p.q / 4.0 * (ones @ p.A) - 0.5 * p.mu) @ ones)
    return IsingModel(q_prime=p.q / 4.0, mu_prime=mu_prime, constant=constant, A=p.A)


def _apply_permutation(p: PortfolioProblem, sigma: np.ndarray) -> tuple[PortfolioProblem, tuple[int, ...]]:
    """Reindex assets so new asset i is old asset sigma[i]."""
    sigma = np.asarray(sigma, dtype=np.int64)
    new_perm = tuple(p.permutation[int(s)] for s in sigma)
    out = PortfolioProblem(
        n=p.n,
        q=p.q,
        A=p.A[np.ix_(sigma, sigma)],
        mu=p.mu[sigma],
        budget=p.budget,
        permutation=new_perm,
    )
    return out, tuple(int(s) for s in sigma)


def reorder(p: PortfolioProblem, mode: str = "by-return") -> tuple[PortfolioProblem, tuple[int, ...]]:
    """Sort assets ascending by variance (diag A) or by expected return.

    Ascending order parks the dominant assets on the most significant bits,
    which biases budget-feasible minima toward high top-half weight.
    """
    if mode == "by-variance":
        key = np.diag(p.A)
    elif mode == "by-return":
        key = p.mu
    else:
        raise ValueError(f"reorder mode {mode!r} not one of ('by-variance', 'by-return')")
    sigma = np.argsort(key, kind="stable")
    return _apply_permutation(p, sigma)


def reverse_assets(p: PortfolioProblem) -> tuple[PortfolioProblem, tuple[int, ...]]:
    return _apply_permutation(p, np.arange(p.n)[::-1])


# ---------------------------------------------------------------------------
# bisection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BisectionProblem:
    """Equal-split graph cut minimization with an additive offset."""

    n: int
    weights: np.ndarray
    offset: float = 0.0
    fixed_top_bit: bool = False
    permutation: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        W = np.asarray(self.weights, dtype=np.float64)
        if W.shape != (self.n, self.n):
            raise ValueError(f"weight matrix shape {W.shape} != ({self.n}, {self.n})")
        if not np.allclose(W, W.T, atol=1e-12):
            raise ValueError("weight matrix is not symmetric")
        if np.any(np.diag(W) != 0.0):
            raise ValueError("weight matrix has nonzero diagonal")
        if self.n % 2:
            raise ValueError(f"bisection needs an even node count, got {self.n}")
        W.setflags(write=False)
        object.__setattr__(self, "weights", W)
        perm = tuple(self.permutation) if self.permutation else tuple(range(self.n))
        if sorted(perm) != list(range(self.n)):
            raise ValueError("permutation is not a permutation of 0..n-1")
        object.__setattr__(self, "permutation", perm)

    @property
    def weighted_degree(self) -> np.ndarray:
        return self.weights.sum(axis=1)


def cost_bisection(b: BisectionProblem, x: BasisLike) -> float:
    """Cut weight of the split indicated by x, plus the offset."""
    bits = _as_bits(x)
    if hamming_weight(bits) != b.n // 2:
        raise ValueError(
            f"bitstring {bits:0{b.n}b} has weight {hamming_weight(bits)}, bisection needs {b.n // 2}"
        )
    if b.fixed_top_bit and not (bits >> (b.n - 1)) & 1:
        raise ValueError("top bit is pinned to 1 for this instance")
    return float(cost_bisection_batch(b, np.array([bits], dtype=np.int64))[0])


def cost_bisection_batch(b: BisectionProblem, states: np.ndarray) -> np.ndarray:
    """Vectorized cut weight: d.x - x^T W x + offset (weights trusted)."""
    B = bits_matrix(states, b.n)
    quad = np.einsum("ki,ij,kj->k", B, b.weights, B, optimize=True)
    return B @ b.weighted_degree - quad + b.offset


def reorder_bisection(b: BisectionProblem) -> tuple[BisectionProblem, tuple[int, ...]]:
    """Sort nodes ascending by weighted degree (the Laplacian diagonal)."""
    sigma = np.argsort(b.weighted_degree, kind="stable")
    new_perm = tuple(b.permutation[int(s)] for s in sigma)
    out = BisectionProblem(
        n=b.n,
        weights=b.weights[np.ix_(sigma, sigma)],
        offset=b.offset,
        fixed_top_bit=b.fixed_top_bit,
        permutation=new_perm,
    )
    return out, tuple(int(s) for s in sigma)


def reverse_nodes(b: BisectionProblem) -> tuple[BisectionProblem, tuple[int, ...]]:
    sigma = np.arange(b.n)[::-1]
    new_perm = tuple(b.permutation[int(s)] for s in sigma)
    out = BisectionProblem(
        n=b.n,
        weights=b.weights[np.ix_(sigma, sigma)],
        offset=b.offset,
        fixed_top_bit=b.fixed_top_bit,
        permutation=new_perm,
    )
    return out, tuple(int(s) for s in sigma)


@dataclass(frozen=True)
class ReducedBisection:
    """View of a pinned-top-bit bisection as a free problem on n-1 qubits.

    Reduced states carry the remaining n-1 bits; ``lift`` restores the pinned
    top bit before cost evaluation.
    """

    base: BisectionProblem

    def __post_init__(self) -> None:
        if not self.base.fixed_top_bit:
            raise ValueError("reduction applies only when the top bit is pinned")

    @property
    def n(self) -> int:
        return self.base.n - 1

    @property
    def budget(self) -> int:
        return self.base.n // 2 - 1

    def lift(self, states: np.ndarray) -> np.ndarray:
        return np.asarray(states, dtype=np.int64) | (1 << (self.base.n - 1))

    def cost_batch(self, states: np.ndarray) -> np.ndarray:
        return cost_bisection_batch(self.base, self.lift(states))


# ---------------------------------------------------------------------------
# generic dispatch (used by the search and optimization layers)
# ---------------------------------------------------------------------------

Problem = Union[PortfolioProblem, BisectionProblem, ReducedBisection]


def dicke_spec_for(problem: Problem) -> DickeSpec:
    if isinstance(problem, PortfolioProblem):
        return DickeSpec(problem.n, problem.budget)
    if isinstance(problem, ReducedBisection):
        return DickeSpec(problem.n, problem.budget)
    if isinstance(problem, BisectionProblem):
        if problem.fixed_top_bit:
            return dicke_spec_for(ReducedBisection(problem))
        return DickeSpec(problem.n, problem.n // 2)
    raise TypeError(f"unsupported problem type {type(problem).__name__}")


def batch_evaluator(problem: Problem, mode: str = "full") -> Callable[[np.ndarray], np.ndarray]:
    """A pure array-in/array-out cost function over basis-state integers."""
    if isinstance(problem, PortfolioProblem):
        return lambda states: cost_binary_batch(problem, states, mode)
    if mode != "full":
        raise ValueError(f"cost mode {mode!r} applies only to portfolio instances")
    if isinstance(problem, ReducedBisection):
        return problem.cost_batch
    if isinstance(problem, BisectionProblem):
        if problem.fixed_top_bit:
            return ReducedBisection(problem).cost_batch
        return lambda states: cost_bisection_batch(problem, states)
    raise TypeError(f"unsupported problem type {type(problem).__name__}")


def reverse_problem(problem: Problem) -> tuple[Problem, tuple[int, ...]]:
    if isinstance(problem, PortfolioProblem):
        return reverse_assets(problem)
    if isinstance(problem, BisectionProblem):
        return reverse_nodes(problem)
    raise TypeError(f"cannot reverse {type(problem).__name__}")


# ---------------------------------------------------------------------------
# ingestion and generation
# ---------------------------------------------------------------------------


def _stats_from_prices(prices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Simple daily returns -> (mean vector, sample covariance with T-1)."""
    returns = prices[1:] / prices[:-1] - 1.0
    mu = returns.mean(axis=0)
    A = np.cov(returns, rowvar=False, ddof=1)
    return mu, np.atleast_2d(A)


def ingest_csv(path: str | Path, q: float = 0.9, budget: int | None = None) -> PortfolioProblem:
    """Build a portfolio instance from a closing-price table.

    Expects a header ``date,asset_0,...``, at least 3 rows, strictly
    increasing ISO dates, and fully numeric price cells.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "date":
        raise ValueError(f"{path}: header must be 'date,asset_0,...', got {rows[0]!r}")
    n = len(header) - 1
    if len(rows) - 1 < 3:
        raise ValueError(f"{path}: needs at least 3 price rows, found {len(rows) - 1}")

    dates: list[_dt.date] = []
    prices = np.empty((len(rows) - 1, n))
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != n + 1:
            raise ValueError(f"{path}:{lineno}: expected {n + 1} cells, found {len(row)}")
        try:
            day = _dt.date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad date {row[0]!r}: {exc}") from None
        if dates and day <= dates[-1]:
            raise ValueError(f"{path}:{lineno}: dates must be strictly increasing")
        dates.append(day)
        for col, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "":
                raise ValueError(f"{path}:{lineno}: missing value in column {header[col + 1]!r}")
            try:
                prices[lineno - 2, col] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: non-numeric cell {cell!r} in column {header[col + 1]!r}"
                ) from None

    mu, A = _stats_from_prices(prices)
    if budget is None:
        budget = n // 2
    return PortfolioProblem(n=n, q=q, A=A, mu=mu, budget=budget)


def synth_price_paths(
    n: int, seed: int, periods: int = 252, num_factors: int = 3
) -> np.ndarray:
    """Seeded factor-model closing prices, shape (periods + 1, n), row 0 all ones.

    Per-asset drifts and volatilities are drawn once; daily shocks mix a few
    common factors with idiosyncratic noise; prices compound multiplicatively.
    """
    if n < 2:
        raise ValueError(f"need at least 2 assets, got {n}")
    if periods < 3:
        raise ValueError(f"need at least 3 periods, got {periods}")
    rng = np.random.default_rng(seed)
    drift = rng.uniform(0.0008, 0.0045, size=n)
    vol = rng.uniform(0.005, 0.025, size=n)
    loadings = rng.normal(size=(n, num_factors))
    loadings /= np.linalg.norm(loadings, axis=1, keepdims=True)
    factor_share = 0.5
    factors = rng.normal(size=(periods, num_factors))
    idio = rng.normal(size=(periods, n))
    shocks = math.sqrt(factor_share) * factors @ loadings.T + math.sqrt(1.0 - factor_share) * idio
    daily = drift[None, :] + vol[None, :] * shocks
    return np.vstack([np.ones(n), np.cumprod(1.0 + daily, axis=0)])


def synth_assets(
    n: int,
    seed: int,
    q: float = 0.9,
    budget: int | None = None,
    periods: int = 252,
    num_factors: int = 3,
) -> PortfolioProblem:
    """Seeded price paths pushed through the same pipeline as CSV ingestion."""
    prices = synth_price_paths(n, seed, periods=periods, num_factors=num_factors)
    mu, A = _stats_from_prices(prices)
    if budget is None:
        budget = n // 2
    return PortfolioProblem(n=n, q=q, A=A, mu=mu, budget=budget)


def synth_graph(
    n: int,
    p_edge: float,
    seed_graph: int,
    seed_weights: int,
    offset: float = 0.0,
    fixed_top_bit: bool = False,
) -> BisectionProblem:
    """Bernoulli(p_edge) edges over i<j in row-major order, uniform (0,1) weights."""
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if not 0.0 < p_edge <= 1.0:
        raise ValueError(f"edge probability {p_edge} outside (0, 1]")
    rng_edges = np.random.default_rng(seed_graph)
    rng_weights = np.random.default_rng(seed_weights)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng_edges.random() < p_edge:
                w = rng_weights.random()
                W[i, j] = W[j, i] = w
    return BisectionProblem(n=n, weights=W, offset=offset, fixed_top_bit=fixed_top_bit)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def save_portfolio(p: PortfolioProblem, path: str | Path) -> None:
    doc = {
        "n": p.n,
        "q": p.q,
        "A": [float(v) for v in p.A.ravel()],
        "mu": [float(v) for v in p.mu],
        "xi": p.budget,
        "permutation": list(p.permutation),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_portfolio(path: str | Path) -> PortfolioProblem:
    doc = json.loads(Path(path).read_text())
    n = int(doc["n"])
    return PortfolioProblem(
        n=n,
        q=float(doc["q"]),
        A=np.array(doc["A"], dtype=np.float64).reshape(n, n),
        mu=np.array(doc["mu"], dtype=np.float64),
        budget=int(doc["xi"]),
        permutation=tuple(int(i) for i in doc.get("permutation", [])),
    )


def save_graph(b: BisectionProblem, path: str | Path) -> None:
    lines = [f"# nodes={b.n} offset={float(b.offset)!r} fixed_top_bit={int(b.fixed_top_bit)}"]
    for i in range(b.n):
        for j in range(i + 1, b.n):
            if b.weights[i, j] != 0.0:
                lines.append(f"{i} {j} {float(b.weights[i, j])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path: str | Path) -> BisectionProblem:
    text = Path(path).read_text().strip().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing header line")
    fields = dict(tok.split("=", 1) for tok in text[0].lstrip("# ").split())
    n = int(fields["nodes"])
    W = np.zeros((n, n))
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        u_s, v_s, w_s = line.split()
        u, v, w = int(u_s), int(v_s), float(w_s)
        W[u, v] = W[v, u] = w
    return BisectionProblem(
        n=n,
        weights=W,
        offset=float(fields.get("offset", 0.0)),
        fixed_top_bit=bool(int(fields.get("fixed_top_bit", 0))),
    )
