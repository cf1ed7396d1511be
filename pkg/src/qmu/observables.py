"""Finite-outcome POVMs with real outcome values.

An observable is a strictly increasing outcome list paired with positive
effects summing to the identity.  Sharp observables carry the extra
projection structure; Bloch-parametrized qubit observables and the
three-outcome unbiased qubit POVM used throughout the scenario library get
dedicated constructors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import opalg
from .distributions import Distribution, MERGE_TOL, make_distribution

TOL_EFFECT = 1e-12        # effect eigenvalue window [-tol, 1+tol]
TOL_SUM = 1e-10           # effects must sum to identity within this
TOL_PROJ = 1e-10          # projection / orthogonality tolerance
TOL_COMMUTE = 1e-10       # commutator norm below which a pair counts as commuting


class Observable:
    """POVM on a finite real outcome set."""

    def __init__(self, outcomes, effects, *, validate: bool = True):
        outcomes = np.asarray(outcomes, dtype=float).reshape(-1)
        effects = np.asarray(effects, dtype=complex)
        if effects.ndim != 3 or effects.shape[0] != outcomes.size:
            raise ValueError("effects must be a (n_outcomes, d, d) array")
        if effects.shape[1] != effects.shape[2]:
            raise ValueError("effects must be square")
        if outcomes.size == 0:
            raise ValueError("observable needs at least one outcome")
        if np.any(np.diff(outcomes) <= 0):
            raise ValueError("outcomes must be strictly increasing")
        self.outcomes = outcomes
        self.effects = effects
        if validate:
            self._validate()

    def _validate(self):
        d = self.dim
        for k, eff in enumerate(self.effects):
            opalg.check_hermitian(eff)
            evals = np.linalg.eigvalsh(eff)
            if evals.min() < -TOL_EFFECT or evals.max() > 1 + TOL_EFFECT:
                raise ValueError(
                    f"effect {k} has eigenvalues outside [0, 1]: "
                    f"[{evals.min():.3e}, {evals.max():.3e}]"
                )
        dev = np.linalg.norm(self.effects.sum(axis=0) - np.eye(d))
        if dev > TOL_SUM:
            raise ValueError(f"effects do not sum to identity (deviation {dev:.3e})")

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.outcomes.size

    def effect(self, k: int) -> np.ndarray:
        return self.effects[k]

    def __repr__(self):
        return f"{type(self).__name__}(outcomes={self.outcomes.tolist()}, dim={self.dim})"


class SharpObservable(Observable):
    """Projection-valued observable (spectral measure)."""

    def _validate(self):
        super()._validate()
        for k, eff in enumerate(self.effects):
            if np.linalg.norm(eff @ eff - eff) > TOL_PROJ:
                raise ValueError(f"effect {k} is not a projection")
        for k in range(self.n_outcomes):
            for l in range(k + 1, self.n_outcomes):
                if np.linalg.norm(self.effects[k] @ self.effects[l]) > TOL_PROJ:
                    raise ValueError(f"effects {k} and {l} are not orthogonal")


@dataclass(frozen=True)
class BlochObservable:
    """Two-outcome qubit POVM with effects (1 - C_plus, C_plus), outcomes -/+1.

    C_plus = (c0*1 + c.sigma)/2; positivity of both effects is equivalent to
    ||c|| <= min(c0, 2 - c0).
    """

    c0: float
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(3)
        object.__setattr__(self, "c", c)
        bound = min(self.c0, 2.0 - self.c0)
        if np.linalg.norm(c) > bound + 1e-12:
            raise ValueError(
                f"positivity violated: ||c|| = {np.linalg.norm(c):.6f} > "
                f"min(c0, 2 - c0) = {bound:.6f}"
            )

    def to_observable(self) -> Observable:
        c_plus = 0.5 * (self.c0 * np.eye(2, dtype=complex) + opalg.bloch_operator(self.c))
        c_minus = np.eye(2, dtype=complex) - c_plus
        return Observable([-1.0, 1.0], np.stack([c_minus, c_plus]))


QUBIT_TRIPLE_GAMMA = 2.0 - np.sqrt(2.0)


def qubit_triple() -> Observable:
    """Three-outcome unbiased qubit POVM with rank-1 effects.

    Outcomes (+1, -1, 0) carry effects g*(1+sigma1)/2, g*(1+sigma2)/2 and
    2(1-g)*(1 - (sigma1+sigma2)/sqrt(2))/2 with g = 2 - sqrt(2); stored on
    the sorted outcome grid (-1, 0, +1).
    """
    g = QUBIT_TRIPLE_GAMMA
    eye = np.eye(2, dtype=complex)
    c_plus = g * 0.5 * (eye + opalg.SIGMA_X)
    c_minus = g * 0.5 * (eye + opalg.SIGMA_Y)
    c_zero = 2 * (1 - g) * 0.5 * (eye - (opalg.SIGMA_X + opalg.SIGMA_Y) / np.sqrt(2))
    obs = Observable([-1.0, 0.0, 1.0], np.stack([c_minus, c_zero, c_plus]))
    total = obs.effects.sum(axis=0)
    if np.linalg.norm(total - eye) > 1e-12:
        raise AssertionError("triple effects drifted off the identity")
    return obs


def spectral_measure(op, merge_tol: float = MERGE_TOL) -> SharpObservable:
    """Spectral measure of a Hermitian operator.

    Eigenvalues within ``merge_tol`` (relative) are merged into one outcome,
    their eigenprojections summed.
    """
    evals, evecs = opalg.eig_hermitian(op)
    outcomes: list[float] = []
    effects: list[np.ndarray] = []
    for lam, k in zip(evals, range(evals.size)):
        proj = np.outer(evecs[:, k], evecs[:, k].conj())
        if outcomes and abs(lam - outcomes[-1]) <= merge_tol * max(
            1.0, abs(lam), abs(outcomes[-1])
        ):
            effects[-1] = effects[-1] + proj
        else:
            outcomes.append(float(lam))
            effects.append(proj)
    return SharpObservable(outcomes, np.stack(effects))


def moment_operator(obs: Observable, n: int) -> np.ndarray:
    """n-th moment operator: sum of x^n F(x)."""
    if n < 1:
        raise ValueError("moment order must be >= 1")
    mom = np.einsum("k,kij->ij", obs.outcomes**n, obs.effects)
    return 0.5 * (mom + mom.conj().T)


def intrinsic_noise(obs: Observable) -> np.ndarray:
    """Intrinsic noise operator: second moment minus squared first moment."""
    m1 = moment_operator(obs, 1)
    return moment_operator(obs, 2) - m1 @ m1


def is_sharp(obs: Observable, tol: float = TOL_PROJ) -> bool:
    return all(np.linalg.norm(e @ e - e) <= tol for e in obs.effects)


def smear(obs: Observable, mu: Distribution, merge_tol: float = MERGE_TOL) -> Observable:
    """Convolution observable: outcome sums x+y weighted by mu(y) F(x)."""
    d = obs.dim
    sums: list[float] = []
    mats: list[np.ndarray] = []
    for y, p in zip(mu.support, mu.probs):
        for x, eff in zip(obs.outcomes, obs.effects):
            sums.append(x + y)
            mats.append(p * eff)
    order = np.argsort(sums, kind="stable")
    out_v: list[float] = []
    out_e: list[np.ndarray] = []
    for idx in order:
        v = sums[idx]
        if out_v and abs(v - out_v[-1]) <= merge_tol * max(1.0, abs(v), abs(out_v[-1])):
            out_e[-1] = out_e[-1] + mats[idx]
        else:
            out_v.append(v)
            out_e.append(mats[idx].copy())
    return Observable(out_v, np.stack(out_e))


def distribution_of(obs: Observable, rho) -> Distribution:
    """Born-rule outcome distribution of an observable in a state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (obs.dim, obs.dim):
        raise ValueError(f"state dimension {rho.shape} does not match observable dim {obs.dim}")
    probs = np.einsum("ij,kji->k", rho, obs.effects).real
    if probs.min() < -1e-12:
        raise ValueError(f"negative Born probability {probs.min():.3e}")
    probs = np.clip(probs, 0.0, 1.0)
    total = probs.sum()
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"Born probabilities sum to {total!r}")
    return Distribution(obs.outcomes, probs)


def distribution_of_pure(obs: Observable, psi) -> Distribution:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return distribution_of(obs, np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class BiProbabilityTable:
    """Real bimeasure table over a product of finite outcome sets.

    ``values[j, k]`` is the (possibly negative) weight for the outcome pair
    (row_outcomes[j], col_outcomes[k]).  ``commuting`` records whether every
    effect pair commuted within tolerance; when it did, the table is a
    genuine coupling of its marginals.
    """

    row_outcomes: np.ndarray
    col_outcomes: np.ndarray
    values: np.ndarray
    commuting: bool

    @property
    def min_entry(self) -> float:
        return float(self.values.min())

    @property
    def has_negative_entry(self) -> bool:
        return self.min_entry < -1e-10

    def row_marginal(self) -> Distribution:
        return make_distribution(self.row_outcomes, self.values.sum(axis=1))

    def col_marginal(self) -> Distribution:
        return make_distribution(self.col_outcomes, self.values.sum(axis=0))

    def value_deviation_squared(self) -> float:
        diff = self.row_outcomes[:, None] - self.col_outcomes[None, :]
        return float(np.sum(diff**2 * self.values))


def product_biobservable(a: SharpObservable, c: Observable, rho) -> BiProbabilityTable:
    """Bimeasure (x, y) -> Re tr(rho A(x) C(y)).

    Row sums give the C distribution, column sums the A distribution.  When
    all effect pairs commute the entries are genuine joint probabilities;
    otherwise negative entries may occur and are reported, not rejected.
    """
    if a.dim != c.dim:
        raise ValueError("observables act on different dimensions")
    rho = np.asarray(rho, dtype=complex)
    values = np.zeros((a.n_outcomes, c.n_outcomes))
    commuting = True
    for j, aj in enumerate(a.effects):
        for k, ck in enumerate(c.effects):
            if np.linalg.norm(aj @ ck - ck @ aj) > TOL_COMMUTE:
                commuting = False
            values[j, k] = float(np.trace(rho @ aj @ ck).real)
    return BiProbabilityTable(a.outcomes.copy(), c.outcomes.copy(), values, commuting)
