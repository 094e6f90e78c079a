"""Zero-order basis and universe Hamiltonian construction.

The universe is a bipartite product of a polyad of two linearly coupled
oscillators (system S) and a ladder of quasi-degenerate rungs whose
degeneracies grow exponentially (environment E).  H = H_S + H_E + H_SE
is assembled dense and real symmetric in the zero-order product basis
|n, m, l> and diagonalized once; all dynamics are then analytic.

Energy origin: system energies are measured from the bottom of the
polyad, e_n = n * kappa.  The constant offset N*omega0 - N*kappa/2 of the
absolute polyad block cancels out of every difference quantity and of
the dynamics, and this origin makes the nominal universe energy of a
product state the integer n + m used for shell bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import units
from .config import ModelConfig
from .rng import COUPLING_STREAM, SHIFT_STREAM, SeededRng

__all__ = [
    "SystemLevels",
    "EnvironmentLevels",
    "UniverseBasis",
    "UniverseHamiltonian",
    "TemperatureInfo",
    "build_system_levels",
    "build_environment",
    "build_basis",
    "build_hamiltonian_matrix",
    "assemble_hamiltonian",
    "temperature_of",
]


@dataclass(frozen=True)
class SystemLevels:
    """Polyad eigenvalues of the coupled two-oscillator system.

    `eigenvalues` are the absolute polyad-block energies (ascending);
    `ladder` is the shifted-origin scale e_n = n * kappa actually used
    as the system energy everywhere else.
    """

    eigenvalues: np.ndarray
    ladder: np.ndarray
    block: np.ndarray


@dataclass(frozen=True)
class EnvironmentLevels:
    """One row per zero-order environment state |m, l>."""

    m: np.ndarray
    l: np.ndarray
    shift: np.ndarray
    energy: np.ndarray

    def __len__(self) -> int:
        return self.energy.size


@dataclass(frozen=True)
class UniverseBasis:
    """Indexed product basis |n, m, l> with zero-order energies and shell labels.

    Flat ordering is system-major: index = n * N_E + offset(m) + l with
    environment states rung-major.  This makes the reduced density
    matrix a plain reshape-and-contract.
    """

    n: np.ndarray
    m: np.ndarray
    l: np.ndarray
    zero_order_energy: np.ndarray
    shell_label: np.ndarray
    n_system_levels: int
    degeneracies: np.ndarray
    env_offsets: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.zero_order_energy.size

    @property
    def n_env_states(self) -> int:
        return self.size // self.n_system_levels

    def index_of(self, n: int, m: int, l: int) -> int:
        if not 0 <= n < self.n_system_levels:
            raise ValueError(f"system level n={n} out of range")
        if not 0 <= m < self.degeneracies.size:
            raise ValueError(f"environment rung m={m} out of range")
        if not 0 <= l < self.degeneracies[m]:
            raise ValueError(f"degeneracy index l={l} out of range for rung m={m}")
        return n * self.n_env_states + int(self.env_offsets[m]) + l

    def triple_of(self, index: int) -> tuple[int, int, int]:
        return int(self.n[index]), int(self.m[index]), int(self.l[index])

    def shell_indices(self, shell: int) -> np.ndarray:
        return np.flatnonzero(self.shell_label == shell)


@dataclass
class UniverseHamiltonian:
    """Dense symmetric universe Hamiltonian with its eigendecomposition."""

    basis: UniverseBasis
    matrix: np.ndarray
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, amplitudes: np.ndarray) -> float:
        """<psi|H|psi> for a normalized amplitude vector."""
        if self.eigenvalues is not None and self.eigenvectors is not None:
            a_re = self.eigenvectors.T @ amplitudes.real
            a_im = self.eigenvectors.T @ amplitudes.imag
            return float(np.dot(self.eigenvalues, a_re * a_re + a_im * a_im))
        return float(np.real(np.vdot(amplitudes, self.matrix @ amplitudes)))


def build_system_levels(config: ModelConfig) -> SystemLevels:
    """Diagonalize the polyad block of the coupled-oscillator system.

    In the local-mode basis {|n1, N - n1>} the block is tridiagonal with
    constant diagonal N*omega0 and ladder off-diagonals
    (kappa/2) * sqrt((n1+1) n2).  This is kappa * Jx in the spin-N/2
    representation, so the polyad eigenvalues are exactly equally spaced
    by kappa (normal-mode frequencies omega0 -/+ kappa/2).
    """
    N = config.polyad_N
    diag = np.full(N + 1, N * config.omega0, dtype=float)
    n1 = np.arange(N, dtype=float)
    off = 0.5 * config.kappa * np.sqrt((n1 + 1.0) * (N - n1))
    block = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    if N == 0:
        eigenvalues = diag.copy()
    else:
        try:
            eigenvalues = scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - symmetric tridiagonal
            raise RuntimeError(f"polyad eigensolver failed for N={N}: {exc}") from exc
    ladder = config.kappa * np.arange(N + 1, dtype=float)
    return SystemLevels(eigenvalues=eigenvalues, ladder=ladder, block=block)


def build_environment(config: ModelConfig, rng: SeededRng) -> EnvironmentLevels:
    """Environment table with Gaussian-spread rungs.

    Energies are m*omega_E + X(m,l) with X ~ N(0, alpha*omega_E*sqrt(2)),
    drawn rung-major from the shift stream of `rng`.
    """
    degs = config.degeneracies()
    m = np.repeat(np.arange(config.n_env_levels), degs)
    l = np.concatenate([np.arange(g) for g in degs])
    sigma = config.alpha * config.omega_E * math.sqrt(2.0)
    shift = rng.split(SHIFT_STREAM).gaussian(0.0, sigma, size=m.size)
    energy = m * config.omega_E + shift
    return EnvironmentLevels(m=m, l=l, shift=shift, energy=energy)


def build_basis(config: ModelConfig, env: EnvironmentLevels | None = None,
                rng: SeededRng | None = None) -> UniverseBasis:
    """Product basis |n, m, l> in system-major, rung-major flat order."""
    if env is None:
        env = build_environment(config, rng if rng is not None else SeededRng(config.rng_seed))
    ns = config.n_system_levels
    ne = len(env)
    system = build_system_levels(config)
    n = np.repeat(np.arange(ns), ne)
    m = np.tile(env.m, ns)
    l = np.tile(env.l, ns)
    energy = np.repeat(system.ladder, ne) + np.tile(env.energy, ns)
    shell = n + m
    degs = np.asarray(config.degeneracies(), dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(degs)[:-1]))
    return UniverseBasis(
        n=n, m=m, l=l,
        zero_order_energy=energy,
        shell_label=shell,
        n_system_levels=ns,
        degeneracies=degs,
        env_offsets=offsets,
    )


def build_hamiltonian_matrix(config: ModelConfig, basis: UniverseBasis,
                             rng: SeededRng) -> np.ndarray:
    """Assemble the dense symmetric H = H_S + H_E + H_SE.

    Diagonal: the zero-order energies of the basis.  Off-diagonal: one
    independent Gaussian variate of width alpha*omega_E per strictly
    upper-triangle element, drawn row-major from the coupling stream and
    mirrored to the lower triangle, so symmetry is exact by construction.

    With coupling_scope = "system_changing_only" the draws still happen
    (the stream contract is unconditional) but elements diagonal in the
    system index are zeroed before mirroring.
    """
    dim = basis.size
    sigma = config.alpha * config.omega_E
    couplings = rng.split(COUPLING_STREAM)
    h = np.zeros((dim, dim), dtype=np.float64)
    restrict = config.coupling_scope == "system_changing_only"
    for i in range(dim - 1):
        row = couplings.gaussian(0.0, sigma, size=dim - 1 - i)
        if restrict:
            row[basis.n[i + 1:] == basis.n[i]] = 0.0
        h[i, i + 1:] = row
    for i in range(dim - 1):
        h[i + 1:, i] = h[i, i + 1:]
    h[np.diag_indices(dim)] = basis.zero_order_energy
    return h


def diagonalize(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a dense symmetric matrix (ascending)."""
    try:
        return scipy.linalg.eigh(matrix, check_finite=False, driver="evd")
    except Exception as exc:
        norm = float(np.abs(matrix).max()) if matrix.size else 0.0
        raise RuntimeError(
            f"dense symmetric eigensolver failed: dim={matrix.shape[0]}, "
            f"max|H|={norm:.6g}: {exc}"
        ) from exc


def assemble_hamiltonian(config: ModelConfig, rng: SeededRng | None = None,
                         *, use_cache: bool = False) -> UniverseHamiltonian:
    """Build basis and matrix from (config, seed) and diagonalize.

    The same (config, seed) always produces a bit-identical matrix.  With
    use_cache=True the eigendecomposition is read from / written to the
    on-disk cache (the solve dominates runtime at production size).
    """
    if rng is None:
        rng = SeededRng(config.rng_seed)
    env = build_environment(config, rng)
    basis = build_basis(config, env)
    matrix = build_hamiltonian_matrix(config, basis, rng)
    if use_cache:
        from . import cache
        eigenvalues, eigenvectors = cache.solve_with_cache(config, matrix)
    else:
        eigenvalues, eigenvectors = diagonalize(matrix)
    return UniverseHamiltonian(
        basis=basis, matrix=matrix,
        eigenvalues=eigenvalues, eigenvectors=eigenvectors,
    )


@dataclass(frozen=True)
class TemperatureInfo:
    """Bath temperature in Kelvin and in reduced form.

    `kelvin` is what downstream thermodynamics uses: the analytic value
    unit/(k_B ln b) by default, or the reference 230.41 K in compat mode
    (the two differ by ~0.7%; the discrepancy is carried along in
    metadata rather than hidden).
    """

    kelvin: float
    kelvin_analytic: float
    kelvin_compat: float
    discrepancy_percent: float
    beta_reduced: float
    kbt_reduced: float


def temperature_of(config: ModelConfig) -> TemperatureInfo:
    """Thermodynamic temperature implied by the degeneracy base b."""
    analytic = units.temperature_kelvin(config.degeneracy_b, config.energy_unit_wavenumbers)
    compat = units.COMPAT_TEMPERATURE_KELVIN
    kelvin = compat if config.paper_compat else analytic
    return TemperatureInfo(
        kelvin=kelvin,
        kelvin_analytic=analytic,
        kelvin_compat=compat,
        discrepancy_percent=100.0 * abs(analytic - compat) / compat,
        beta_reduced=math.log(config.degeneracy_b) / config.omega_E,
        kbt_reduced=units.kbt_reduced(kelvin, config.energy_unit_wavenumbers),
    )
