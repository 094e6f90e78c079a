"""Initial states and analytic time propagation in the eigenbasis.

Propagation is exact: c(t) = V exp(-i E t) V^T c(0) through the stored
eigendecomposition.  Every requested time is reached in a single step
from the input state (no step-to-step error accumulation); evaluating a
whole grid batches the phase rotation into two real GEMMs per chunk.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import UniverseBasis, UniverseHamiltonian
from .rng import PHASE_STREAM, SeededRng

NORM_TOL = 1e-10


@dataclass
class PureState:
    """Complex amplitudes over the zero-order product basis at one time."""

    amplitudes: np.ndarray
    time: float = 0.0

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        n = self.norm()
        if abs(n - 1.0) > tol:
            raise ValueError(f"state norm {n} deviates from 1 beyond {tol}")


def initial_state(basis: UniverseBasis, n: int, total_energy: int,
                  phase_rng: SeededRng | None = None) -> PureState:
    """Equal-weight superposition over the environment rung conserving n + m.

    The system sits in eigenlevel n; the environment occupies every
    quasi-degenerate state of rung m = total_energy - n with amplitude
    1/sqrt(g(m)) (real positive unless `phase_rng` supplies random
    phases).  The result is a product state: S_vN of the system is zero.
    """
    if not 0 <= n < basis.n_system_levels:
        raise ValueError(f"system level n={n} outside 0..{basis.n_system_levels - 1}")
    m = total_energy - n
    if not 0 <= m < basis.degeneracies.size:
        raise ValueError(
            f"initial condition needs environment rung m={m} for n={n}, "
            f"total energy {total_energy}; valid rungs are 0..{basis.degeneracies.size - 1}"
        )
    g = int(basis.degeneracies[m])
    amplitudes = np.zeros(basis.size, dtype=np.complex128)
    start = basis.index_of(n, m, 0)
    amp = 1.0 / np.sqrt(g)
    if phase_rng is None:
        amplitudes[start:start + g] = amp
    else:
        theta = 2.0 * np.pi * phase_rng.split(PHASE_STREAM).split(n).uniform(size=g)
        amplitudes[start:start + g] = amp * np.exp(1j * theta)
    return PureState(amplitudes=amplitudes, time=0.0)


def _real_matmul_complex(mat: np.ndarray, z: np.ndarray) -> np.ndarray:
    # real matrix times complex vector/matrix without promoting `mat` to complex
    return mat @ np.ascontiguousarray(z.real) + 1j * (mat @ np.ascontiguousarray(z.imag))


def propagate(state: PureState, ham: UniverseHamiltonian, t: float) -> PureState:
    """Evolve `state` by time t (negative t runs backward)."""
    if ham.eigenvalues is None or ham.eigenvectors is None:
        raise ValueError("Hamiltonian has no eigendecomposition")
    if state.amplitudes.size != ham.dim:
        raise ValueError(
            f"state dimension {state.amplitudes.size} does not match "
            f"Hamiltonian dimension {ham.dim}"
        )
    v = ham.eigenvectors
    a = _real_matmul_complex(v.T, state.amplitudes.astype(np.complex128, copy=False))
    a *= np.exp(-1j * ham.eigenvalues * t)
    c = _real_matmul_complex(v, a)
    return PureState(amplitudes=c, time=state.time + t)


def propagate_to_times(state: PureState, ham: UniverseHamiltonian,
                       times: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Amplitudes at many times from one state, shape (len(times), dim).

    Each time is computed directly from `state` (not chained), so rows
    are independent and identical to single `propagate` calls.
    """
    if ham.eigenvalues is None or ham.eigenvectors is None:
        raise ValueError("Hamiltonian has no eigendecomposition")
    times = np.asarray(times, dtype=float)
    v = ham.eigenvectors
    a0 = _real_matmul_complex(v.T, state.amplitudes.astype(np.complex128, copy=False))
    out = np.empty((times.size, ham.dim), dtype=np.complex128)
    for start in range(0, times.size, chunk):
        ts = times[start:start + chunk]
        phases = np.exp(-1j * np.outer(ham.eigenvalues, ts))
        phases *= a0[:, None]
        out[start:start + ts.size] = _real_matmul_complex(v, phases).T
    return out


def time_grid(t_max: float, n_points: int) -> np.ndarray:
    """Uniform grid of reduced times from 0 to t_max inclusive."""
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    if n_points < 1:
        raise ValueError("n_points must be a positive integer")
    if n_points == 1:
        warnings.warn("time grid with a single point is degenerate", stacklevel=2)
        return np.zeros(1)
    return np.linspace(0.0, t_max, n_points)
