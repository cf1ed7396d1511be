"""Finite probability distributions on the reals and Wasserstein-2 machinery.

Two independent routes to the 2-deviation are kept deliberately separate:
``w2_quantile`` evaluates the comonotone (quantile) closed form exactly by
merging cumulative breakpoints, while ``w2_lp_oracle`` solves the coupling
linear program — with exact rational arithmetic up to 16 support points, a
floating-point LP above that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

PROB_TOL = 1e-10          # total-probability tolerance
MARGINAL_TOL = 1e-9       # coupling marginal tolerance
MERGE_TOL = 1e-9          # relative support-merge tolerance
EXACT_LP_MAX = 16         # largest support size for the exact rational simplex
LP_MAX = 64               # oracle scale


@dataclass(frozen=True)
class Distribution:
    """Probability measure with finite support on the reals."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float).reshape(-1)
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if support.shape != probs.shape or support.size == 0:
            raise ValueError("support and probs must be equal-length nonempty arrays")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if probs.min() < -PROB_TOL:
            raise ValueError(f"negative probability {probs.min():.3e}")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, expected 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", np.clip(probs, 0.0, None))

    def moment(self, n: int) -> float:
        return float(np.sum(self.support**n * self.probs))

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def variance(self) -> float:
        m = self.mean
        return float(np.sum((self.support - m) ** 2 * self.probs))

    @property
    def std(self) -> float:
        return math.sqrt(max(self.variance, 0.0))

    def deviation_from_point(self, y: float) -> float:
        """Root-mean-square deviation from the point measure at y."""
        return math.sqrt(float(np.sum((self.support - y) ** 2 * self.probs)))

    def translate(self, t: float) -> "Distribution":
        return Distribution(self.support + t, self.probs)

    def scale(self, lam: float) -> "Distribution":
        if lam <= 0:
            raise ValueError("scale factor must be positive")
        return Distribution(self.support * lam, self.probs)


def delta(y: float) -> Distribution:
    return Distribution(np.array([y]), np.array([1.0]))


def make_distribution(values, probs, merge_tol: float = MERGE_TOL) -> Distribution:
    """Build a Distribution, sorting and merging nearby support points.

    Values closer than ``merge_tol * max(1, |v|)`` are merged, their
    probabilities summed; zero-probability atoms are kept only if needed to
    leave at least one point.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    probs = np.asarray(probs, dtype=float).reshape(-1)
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    out_v: list[float] = []
    out_p: list[float] = []
    for v, p in zip(values, probs):
        if out_v and abs(v - out_v[-1]) <= merge_tol * max(1.0, abs(v), abs(out_v[-1])):
            out_p[-1] += p
        else:
            out_v.append(v)
            out_p.append(p)
    v_arr = np.array(out_v)
    p_arr = np.array(out_p)
    keep = p_arr > 0
    if keep.any():
        v_arr, p_arr = v_arr[keep], p_arr[keep]
    else:
        v_arr, p_arr = v_arr[:1], np.array([p_arr[:1].sum()])
    return Distribution(v_arr, p_arr)


def convolve(mu: Distribution, nu: Distribution, merge_tol: float = MERGE_TOL) -> Distribution:
    """Convolution mu * nu on finite supports (law of the sum)."""
    sums = mu.support[:, None] + nu.support[None, :]
    weights = mu.probs[:, None] * nu.probs[None, :]
    return make_distribution(sums.reshape(-1), weights.reshape(-1), merge_tol)


@dataclass(frozen=True)
class Coupling:
    """Joint measure on a product of finite supports with prescribed marginals."""

    row_support: np.ndarray
    col_support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        rs = np.asarray(self.row_support, dtype=float).reshape(-1)
        cs = np.asarray(self.col_support, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (rs.size, cs.size):
            raise ValueError("weights shape does not match supports")
        if w.min() < -PROB_TOL:
            raise ValueError(f"negative coupling weight {w.min():.3e}")
        object.__setattr__(self, "row_support", rs)
        object.__setattr__(self, "col_support", cs)
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    def row_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def col_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def check_marginals(self, mu: Distribution, nu: Distribution, tol: float = MARGINAL_TOL):
        if self.row_support.shape != mu.support.shape or not np.allclose(
            self.row_support, mu.support
        ):
            raise ValueError("row support does not match first marginal")
        if self.col_support.shape != nu.support.shape or not np.allclose(
            self.col_support, nu.support
        ):
            raise ValueError("column support does not match second marginal")
        if np.max(np.abs(self.row_marginal() - mu.probs)) > tol:
            raise ValueError("row sums do not reproduce the first marginal")
        if np.max(np.abs(self.col_marginal() - nu.probs)) > tol:
            raise ValueError("column sums do not reproduce the second marginal")

    def cost(self) -> float:
        diff = self.row_support[:, None] - self.col_support[None, :]
        return float(np.sum(self.weights * diff**2))


def w2_quantile(mu: Distribution, nu: Distribution) -> tuple[float, Coupling]:
    """Wasserstein 2-deviation via the quantile (comonotone) construction.

    The squared value is the integral of the squared quantile difference,
    evaluated exactly by merging the cumulative breakpoints of both
    distributions; the returned coupling attains it.
    """
    m, n = mu.support.size, nu.support.size
    weights = np.zeros((m, n))
    cost = 0.0
    # Two-pointer sweep over remaining masses.
    rem_a = mu.probs.astype(float).copy()
    rem_b = nu.probs.astype(float).copy()
    i = j = 0
    while i < m and j < n:
        if rem_a[i] <= 0:
            i += 1
            continue
        if rem_b[j] <= 0:
            j += 1
            continue
        seg = min(rem_a[i], rem_b[j])
        weights[i, j] += seg
        cost += seg * (mu.support[i] - nu.support[j]) ** 2
        rem_a[i] -= seg
        rem_b[j] -= seg
        if rem_a[i] <= rem_b[j]:
            rem_a[i] = 0.0
            i += 1
        else:
            rem_b[j] = 0.0
            j += 1
    coupling = Coupling(mu.support, nu.support, weights)
    return math.sqrt(max(cost, 0.0)), coupling


def cauchy_schwarz_bounds(mu: Distribution, nu: Distribution) -> tuple[float, float]:
    """Lower/upper bounds on the squared 2-deviation from means and spreads."""
    md = (mu.mean - nu.mean) ** 2
    lower = (mu.std - nu.std) ** 2 + md
    upper = (mu.std + nu.std) ** 2 + md
    return lower, upper


# ---------------------------------------------------------------------------
# LP oracle
# ---------------------------------------------------------------------------


def w2_lp_oracle(mu: Distribution, nu: Distribution) -> float:
    """Wasserstein 2-deviation by solving the coupling linear program.

    Supports up to 16 points per side are solved with an exact rational
    transportation simplex; larger instances (up to 64) with scipy's HiGHS
    solver. Deliberately independent of the quantile construction.
    """
    m, n = mu.support.size, nu.support.size
    if m > LP_MAX or n > LP_MAX:
        raise ValueError(f"oracle scale exceeded: supports {m}x{n} > {LP_MAX}")
    if m <= EXACT_LP_MAX and n <= EXACT_LP_MAX:
        cost = _transport_simplex_exact(
            list(mu.support), list(mu.probs), list(nu.support), list(nu.probs)
        )
        return math.sqrt(max(float(cost), 0.0))
    return _transport_lp_float(mu, nu)


def _transport_lp_float(mu: Distribution, nu: Distribution) -> float:
    from scipy.optimize import linprog

    m, n = mu.support.size, nu.support.size
    diff = mu.support[:, None] - nu.support[None, :]
    c = (diff**2).reshape(-1)
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([mu.probs, nu.probs * (mu.probs.sum() / nu.probs.sum())])
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return math.sqrt(max(res.fun, 0.0))


def _transport_simplex_exact(row_vals, row_probs, col_vals, col_probs) -> Fraction:
    """Minimum squared-difference transport cost, exact over the rationals.

    Classic transportation simplex with Bland's anti-cycling rule.  Floats
    are dyadic rationals, so converting inputs to ``Fraction`` is lossless;
    pivoting only adds and subtracts masses, so denominators stay bounded.
    The initial basis is a north-west corner solution on *reversed* index
    order, so the start point is unrelated to the comonotone coupling.
    """
    m, n = len(row_vals), len(col_vals)
    supply = [Fraction(p) for p in row_probs]
    demand = [Fraction(q) for q in col_probs]
    ts, td = sum(supply), sum(demand)
    if ts == 0 or td == 0:
        raise ValueError("degenerate distribution with zero total mass")
    supply = [s / ts for s in supply]
    demand = [d / td for d in demand]
    cost = [[(Fraction(x) - Fraction(y)) ** 2 for y in col_vals] for x in row_vals]

    oi = list(range(m))[::-1]
    oj = list(range(n))[::-1]
    weight: dict[tuple[int, int], Fraction] = {}
    basis: set[tuple[int, int]] = set()
    i = j = 0
    s, d = supply[oi[0]], demand[oj[0]]
    while True:
        t = min(s, d)
        cell = (oi[i], oj[j])
        weight[cell] = weight.get(cell, Fraction(0)) + t
        basis.add(cell)
        s -= t
        d -= t
        if i == m - 1 and j == n - 1:
            break
        if s == 0 and i < m - 1:
            i += 1
            s = supply[oi[i]]
        else:
            j += 1
            d = demand[oj[j]]

    while True:
        u, v = _transport_potentials(m, n, basis, cost)
        entering = None
        for ii in range(m):
            for jj in range(n):
                if (ii, jj) in basis:
                    continue
                if cost[ii][jj] - u[ii] - v[jj] < 0:
                    entering = (ii, jj)
                    break
            if entering:
                break
        if entering is None:
            return sum(weight.get((ii, jj), Fraction(0)) * cost[ii][jj] for ii, jj in basis)
        cycle = _transport_cycle(basis, entering)
        minus = cycle[1::2]
        theta = min(weight.get(c, Fraction(0)) for c in minus)
        leaving = min(c for c in minus if weight.get(c, Fraction(0)) == theta)
        for k, cell in enumerate(cycle):
            cur = weight.get(cell, Fraction(0))
            weight[cell] = cur + theta if k % 2 == 0 else cur - theta
        basis.remove(leaving)
        weight.pop(leaving, None)
        basis.add(entering)


def _transport_potentials(m, n, basis, cost):
    """Dual potentials u_i + v_j = c_ij on the basis tree (u_0 = 0)."""
    u = [None] * m
    v = [None] * n
    u[0] = Fraction(0)
    by_row: dict[int, list[int]] = {}
    by_col: dict[int, list[int]] = {}
    for i, j in basis:
        by_row.setdefault(i, []).append(j)
        by_col.setdefault(j, []).append(i)
    stack = [("r", 0)]
    while stack:
        kind, idx = stack.pop()
        if kind == "r":
            for j in by_row.get(idx, ()):
                if v[j] is None:
                    v[j] = cost[idx][j] - u[idx]
                    stack.append(("c", j))
        else:
            for i in by_col.get(idx, ()):
                if u[i] is None:
                    u[i] = cost[i][idx] - v[idx]
                    stack.append(("r", i))
    if any(x is None for x in u) or any(x is None for x in v):
        raise RuntimeError("basis does not span the transportation graph")
    return u, v


def _transport_cycle(basis, entering):
    """Unique alternating cycle formed by the basis tree plus the entering cell.

    Returned as a cell list starting at the entering cell; even positions gain
    mass, odd positions lose it.
    """
    i0, j0 = entering
    by_row: dict[int, list[int]] = {}
    by_col: dict[int, list[int]] = {}
    for i, j in basis:
        by_row.setdefault(i, []).append(j)
        by_col.setdefault(j, []).append(i)
    # Path in the basis tree from column j0 back to row i0.
    parent: dict[tuple[str, int], tuple[str, int]] = {}
    start, goal = ("c", j0), ("r", i0)
    stack = [start]
    seen = {start}
    while stack:
        node = stack.pop()
        if node == goal:
            break
        kind, idx = node
        neighbors = (
            [("r", i) for i in by_col.get(idx, ())]
            if kind == "c"
            else [("c", j) for j in by_row.get(idx, ())]
        )
        for nb in neighbors:
            if nb not in seen:
                seen.add(nb)
                parent[nb] = node
                stack.append(nb)
    node = goal
    path = [node]
    while node != start:
        node = parent[node]
        path.append(node)
    path.reverse()  # ("c", j0), ..., ("r", i0) alternating
    cycle = [entering]
    for a, b in zip(path, path[1:]):
        cell = (b[1], a[1]) if a[0] == "c" else (a[1], b[1])
        cycle.append(cell)
    return cycle
