"""Sampled wavefunctions on a uniform position grid with DFT momentum side.

Units are dimensionless with hbar = m = omega = 1; positions are
x_j = (j - n/2) dx with dx = 2L/n, momenta p_k = (k - n/2) pi/L in
symmetric (fftshift) ordering.  Grid constructions never materialize dense
effect families; distributions come from Born-rule sampling and operators
act by FFT application.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, convolve, make_distribution
from .observables import SharpObservable
from .schemes import MeasurementScheme

ALIASING_TOL = 1e-8
NORM_TOL = 1e-8


class GridAliasingError(ValueError):
    """Raised when wavefunction mass sits too close to the grid boundary."""


@dataclass(frozen=True)
class GridSystem:
    """Uniform position grid of n points (power of two) on [-L, L)."""

    n: int
    half_width: float

    def __post_init__(self):
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ValueError("grid size must be a power of two, at least 4")
        if self.half_width <= 0:
            raise ValueError("half width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def dp(self) -> float:
        return math.pi / self.half_width

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def momenta(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dp

    def normalize(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        if psi.size != self.n:
            raise ValueError("wavefunction size does not match the grid")
        norm = math.sqrt(float(np.sum(np.abs(psi) ** 2)) * self.dx)
        if norm == 0:
            raise ValueError("cannot normalize the zero wavefunction")
        return psi / norm

    def check_normalized(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        total = float(np.sum(np.abs(psi) ** 2)) * self.dx
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"wavefunction norm^2 = {total!r}, expected 1")
        return psi

    def inner(self, a, b) -> complex:
        return complex(np.vdot(a, b) * self.dx)


def _to_momentum(psi: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(psi)))


def _to_position(phi: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(phi)))


def momentum_wavefunction(grid: GridSystem, psi) -> np.ndarray:
    """Momentum-space amplitudes on grid.momenta (normalized like psi)."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return _to_momentum(psi) * grid.dx / math.sqrt(2.0 * math.pi)


def position_distribution(grid: GridSystem, psi) -> Distribution:
    psi = grid.check_normalized(psi)
    return Distribution(grid.positions, np.abs(psi) ** 2 * grid.dx)


def momentum_distribution(grid: GridSystem, psi) -> Distribution:
    psi = grid.check_normalized(psi)
    phi = momentum_wavefunction(grid, psi)
    probs = np.abs(phi) ** 2 * grid.dp
    return Distribution(grid.momenta, probs / probs.sum())


def parity_flip(psi) -> np.ndarray:
    """(Pi psi)(x) = psi(-x) as the FFT-compatible circular index reversal."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.roll(psi[::-1], 1)


def boundary_mass(grid: GridSystem, psi, cells: int = 2) -> float:
    prob = np.abs(np.asarray(psi).reshape(-1)) ** 2 * grid.dx
    return float(prob[:cells].sum() + prob[-cells:].sum())


def check_aliasing(grid: GridSystem, psi):
    mass = boundary_mass(grid, psi)
    if mass > ALIASING_TOL:
        raise GridAliasingError(
            f"wavefunction mass {mass:.3e} within {ALIASING_TOL} of the grid boundary"
        )


def gaussian_state(grid: GridSystem, center: float = 0.0, width: float = 1.0,
                   momentum: float = 0.0) -> np.ndarray:
    """Normalized Gaussian e^{-(x-c)^2/(2 w^2)} e^{i p x}; width 1 is the
    oscillator ground state."""
    x = grid.positions
    psi = np.exp(-((x - center) ** 2) / (2.0 * width**2)) * np.exp(1j * momentum * x)
    return grid.normalize(psi)


def ground_state(grid: GridSystem) -> np.ndarray:
    return gaussian_state(grid)


def apply_position(grid: GridSystem, psi) -> np.ndarray:
    return grid.positions * np.asarray(psi, dtype=complex).reshape(-1)


def apply_momentum(grid: GridSystem, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return _to_position(grid.momenta * _to_momentum(psi))


def apply_oscillator(grid: GridSystem, psi, subtract_ground: bool = True) -> np.ndarray:
    """(P^2/2 + Q^2/2 - 1/2) psi; the shift makes the ground state a null vector."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    kinetic = _to_position(0.5 * grid.momenta**2 * _to_momentum(psi))
    out = kinetic + 0.5 * grid.positions**2 * psi
    if subtract_ground:
        out = out - 0.5 * psi
    return out


def operator_moment(grid: GridSystem, apply_op, psi, n: int = 1) -> float:
    """<psi| O^n |psi> for a Hermitian grid operator given by its action."""
    vec = np.asarray(psi, dtype=complex).reshape(-1)
    for _ in range(n):
        vec = apply_op(grid, vec)
    return float(grid.inner(psi, vec).real)


def phase_space_marginals(grid: GridSystem, tau) -> tuple[Distribution, Distribution]:
    """Position/momentum marginals of the covariant measurement generated by tau.

    Both are Born distributions of the parity-flipped generating state: the
    position marginal smears by mu_tau = Q_{Pi tau Pi}, the momentum marginal
    by nu_tau = P_{Pi tau Pi}.
    """
    tau = grid.check_normalized(tau)
    check_aliasing(grid, tau)
    flipped = parity_flip(tau)
    return position_distribution(grid, flipped), momentum_distribution(grid, flipped)


# ---------------------------------------------------------------------------
# Smeared-position error searches (distribution-level; no dense effects)
# ---------------------------------------------------------------------------


def smeared_position_maps(grid: GridSystem, mu: Distribution):
    """State -> distribution maps for sharp position and its mu-smearing."""

    def dist_q(psi):
        return position_distribution(grid, grid.normalize(psi))

    def dist_smeared(psi):
        return convolve(mu, position_distribution(grid, grid.normalize(psi)))

    return dist_q, dist_smeared


def basis_states(grid: GridSystem, count: int = 16) -> list[np.ndarray]:
    """Evenly spaced position eigenstates (grid-normalized basis vectors)."""
    step = max(1, grid.n // count)
    out = []
    for j in range(0, grid.n, step):
        vec = np.zeros(grid.n, dtype=complex)
        vec[j] = 1.0 / math.sqrt(grid.dx)
        out.append(vec)
    return out


def smeared_position_calibration_families(grid: GridSystem, mu: Distribution,
                                          seed: int = 0, subsample: int = 64,
                                          perturbations: int = 4):
    """Calibration families for sharp position vs its mu-smearing.

    Position eigenspaces are one-dimensional, so the exact candidates are the
    basis states (approximator distribution: mu translated to the eigenvalue);
    random grid states supply the admissible perturbations.
    """
    from .errmetrics import CalibrationFamily

    rng = np.random.default_rng(seed)
    pert_pairs = []
    for _ in range(perturbations):
        v = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        psi = grid.normalize(v)
        pos = position_distribution(grid, psi)
        pert_pairs.append((pos, convolve(mu, pos)))
    xs = grid.positions
    families = []
    step = max(1, grid.n // subsample)
    for j in range(0, grid.n, step):
        y = float(xs[j])
        span = max(abs(float(xs[0]) - y), abs(float(xs[-1]) - y))
        families.append(
            CalibrationFamily(y, (mu.translate(y),), tuple(pert_pairs), span)
        )
    return families


# ---------------------------------------------------------------------------
# Dense operators for small grids (used by the von Neumann scheme)
# ---------------------------------------------------------------------------


def dft_matrix(grid: GridSystem) -> np.ndarray:
    """Unitary symmetric-grid DFT: entry (k, j) = e^{-i p_k x_j} / sqrt(n)."""
    j = np.arange(grid.n) - grid.n // 2
    phase = np.exp(-2j * math.pi * np.outer(j, j) / grid.n)
    return phase / math.sqrt(grid.n)


def momentum_matrix(grid: GridSystem) -> np.ndarray:
    f = dft_matrix(grid)
    return f.conj().T @ np.diag(grid.momenta.astype(complex)) @ f


def position_observable(grid: GridSystem) -> SharpObservable:
    """Dense position POVM; guarded to small grids (effects are n x n each)."""
    if grid.n > 128:
        raise ValueError("dense position observable limited to grids of at most 128 points")
    effects = np.zeros((grid.n, grid.n, grid.n), dtype=complex)
    for k in range(grid.n):
        effects[k, k, k] = 1.0
    return SharpObservable(grid.positions, effects)


@dataclass(frozen=True)
class VonNeumannModel:
    """Approximate position measurement with coupling e^{-i lam Q (x) P_probe}.

    The pointer is the probe position relabeled by f(y) = y/lam, so the
    outcome estimates the object position as x + y0/lam; an even probe
    wavefunction makes the model unbiased.  Requires lam dx_obj to be an
    integer multiple of the probe spacing so pointer labels land on the
    convolution lattice exactly.
    """

    object_grid: GridSystem
    probe_grid: GridSystem
    lam: float
    probe_psi: np.ndarray

    def __post_init__(self):
        psi = self.probe_grid.check_normalized(self.probe_psi)
        object.__setattr__(self, "probe_psi", psi)
        if self.lam <= 0:
            raise ValueError("coupling strength must be positive")
        ratio = self.lam * self.object_grid.dx / self.probe_grid.dx
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                "incompatible grids: lam * dx_object must be an integer multiple "
                f"of dx_probe (got ratio {ratio!r})"
            )

    @property
    def shift_cells(self) -> np.ndarray:
        ratio = round(self.lam * self.object_grid.dx / self.probe_grid.dx)
        return (np.arange(self.object_grid.n) - self.object_grid.n // 2) * int(ratio)

    def noise_distribution(self) -> Distribution:
        """The smearing measure: law of (probe position)/lam."""
        probs = np.abs(self.probe_psi) ** 2 * self.probe_grid.dx
        return make_distribution(self.probe_grid.positions / self.lam, probs / probs.sum())

    def measured_distribution(self, psi) -> Distribution:
        """Pointer-label distribution for object state psi (fast route)."""
        psi = self.object_grid.check_normalized(psi)
        check_aliasing(self.object_grid, psi)
        weights = np.abs(psi) ** 2 * self.object_grid.dx
        probe_prob = np.abs(self.probe_psi) ** 2 * self.probe_grid.dx
        out = np.zeros(self.probe_grid.n)
        for w, cells in zip(weights, self.shift_cells):
            if w == 0.0:
                continue
            out += w * np.roll(probe_prob, cells)
        return make_distribution(self.probe_grid.positions / self.lam, out / out.sum())

    def to_scheme(self) -> MeasurementScheme:
        """Dense measurement scheme on object (x) probe (small grids only).

        The coupling is block diagonal in the object position basis: block j
        translates the probe by lam * x_j.
        """
        no, np_ = self.object_grid.n, self.probe_grid.n
        if no * np_ > 4096:
            raise ValueError("dense scheme limited to total dimension 4096")
        f = dft_matrix(self.probe_grid)
        p = self.probe_grid.momenta
        u = np.zeros((no * np_, no * np_), dtype=complex)
        for j, x in enumerate(self.object_grid.positions):
            block = f.conj().T @ (np.exp(-1j * self.lam * x * p)[:, None] * f)
            u[j * np_ : (j + 1) * np_, j * np_ : (j + 1) * np_] = block
        sigma = np.outer(self.probe_psi, self.probe_psi.conj()) * self.probe_grid.dx
        sigma /= np.trace(sigma).real
        pointer = position_observable(self.probe_grid)
        return MeasurementScheme(
            probe_state=sigma,
            coupling=u,
            pointer=pointer,
            pointer_values=self.probe_grid.positions / self.lam,
        )


def von_neumann_scheme(object_grid: GridSystem, probe_grid: GridSystem, lam: float,
                       probe_psi) -> MeasurementScheme:
    """Dense scheme of the momentum-coupled approximate position model."""
    return VonNeumannModel(object_grid, probe_grid, lam, probe_psi).to_scheme()
