"""Per-time-point physical quantities.

Two entropies live side by side and must not be confused:

* S_vN -- von Neumann entropy of the system's reduced density matrix,
  -sum(lambda ln lambda) over RDM eigenvalues; zero for a product state
  and bounded by ln(n_system_levels).  Measures S-E entanglement.
* S_univ -- Shannon entropy -sum(p ln p) of the pure universe state's
  populations p_i = |c_i|^2 in a reference basis (default: the
  zero-order product basis).  In the energy eigenbasis the populations
  never move, so S_univ is frozen there by construction.

All entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import units
from .dynamics import PureState
from .model import UniverseBasis, UniverseHamiltonian

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_CLIP_TOL = 1e-9
ORTHOGONALITY_TOL = 1e-10


@dataclass
class ReducedDensityMatrix:
    """System-side density matrix from tracing the universe projector over E."""

    matrix: np.ndarray
    time: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def validate(self) -> None:
        h_err = float(np.abs(self.matrix - self.matrix.conj().T).max())
        if h_err > HERMITICITY_TOL:
            raise ValueError(f"RDM hermiticity violated: max deviation {h_err:.3e}")
        t_err = abs(float(self.matrix.trace().real) - 1.0)
        if t_err > TRACE_TOL:
            raise ValueError(f"RDM trace deviates from 1 by {t_err:.3e}")
        lam = np.linalg.eigvalsh(self.matrix)
        if lam.min() < -EIGENVALUE_CLIP_TOL or lam.max() > 1.0 + EIGENVALUE_CLIP_TOL:
            raise ValueError(f"RDM eigenvalues outside [0, 1]: [{lam.min()}, {lam.max()}]")


def reduced_density_matrix(state: PureState, basis: UniverseBasis) -> ReducedDensityMatrix:
    """rho_S[n, n'] = sum_{m,l} c_(n,m,l) conj(c_(n',m,l)).

    The flat basis order is system-major, so the trace over E is a
    reshape to (N_S, N_E) followed by one small contraction.
    """
    c = state.amplitudes.reshape(basis.n_system_levels, basis.n_env_states)
    rho = c @ c.conj().T
    rho = 0.5 * (rho + rho.conj().T)  # exact hermiticity against rounding
    return ReducedDensityMatrix(matrix=rho, time=state.time)


def shannon_entropy(p: np.ndarray) -> float:
    """-sum(p ln p) in nats with the 0 ln 0 = 0 convention."""
    p = np.asarray(p)
    pos = p[p > 0.0]
    return float(-np.dot(pos, np.log(pos)))


def von_neumann_entropy(rdm: ReducedDensityMatrix) -> float:
    """Entropy of the RDM spectrum, in nats.

    Eigenvalues are clipped to [0, 1] before the log; a clip larger than
    EIGENVALUE_CLIP_TOL signals a corrupted RDM and raises instead of
    being absorbed silently.
    """
    lam = np.linalg.eigvalsh(rdm.matrix)
    if lam.min() < -EIGENVALUE_CLIP_TOL or lam.max() > 1.0 + EIGENVALUE_CLIP_TOL:
        raise ValueError(
            f"RDM eigenvalues outside [-{EIGENVALUE_CLIP_TOL}, 1+{EIGENVALUE_CLIP_TOL}]: "
            f"[{lam.min()}, {lam.max()}]"
        )
    return shannon_entropy(np.clip(lam, 0.0, 1.0))


def universe_entropy(state: PureState, reference=None) -> float:
    """Shannon entropy of |c_i|^2 in a reference basis, in nats.

    reference: None for the zero-order product basis (the default
    "good" basis for heat flow), a UniverseHamiltonian for its energy
    eigenbasis (populations constant in time, entropy frozen), or an
    orthogonal matrix whose columns are custom reference vectors.
    """
    c = state.amplitudes
    if reference is None:
        return shannon_entropy(np.abs(c) ** 2)
    if isinstance(reference, UniverseHamiltonian):
        if reference.eigenvectors is None:
            raise ValueError("Hamiltonian has no eigendecomposition")
        v = reference.eigenvectors
        a = v.T @ c.real + 1j * (v.T @ c.imag)
        return shannon_entropy(np.abs(a) ** 2)
    u = np.asarray(reference)
    if u.shape != (c.size, c.size):
        raise ValueError(f"reference transform shape {u.shape} does not match state")
    ortho_err = float(np.abs(u.conj().T @ u - np.eye(c.size)).max())
    if ortho_err > ORTHOGONALITY_TOL:
        raise ValueError(f"reference transform not orthogonal: deviation {ortho_err:.3e}")
    return shannon_entropy(np.abs(u.conj().T @ c) ** 2)


def shell_partial_entropies(p: np.ndarray, shell_labels: np.ndarray,
                            n_shells: int | None = None) -> np.ndarray:
    """-sum(p ln p) restricted to each nominal shell n + m.

    Disjoint index sets, so the entries sum exactly to the total
    zero-order-basis entropy.
    """
    if n_shells is None:
        n_shells = int(shell_labels.max()) + 1
    plogp = np.zeros_like(p)
    mask = p > 0.0
    plogp[mask] = -p[mask] * np.log(p[mask])
    return np.bincount(shell_labels, weights=plogp, minlength=n_shells)


def system_energy(rdm: ReducedDensityMatrix, system_levels: np.ndarray) -> float:
    """U_S = sum_n e_n rho_S[n, n] on the shifted-origin ladder e_n = n*kappa."""
    return float(np.dot(np.asarray(system_levels), rdm.diagonal()))


def _free_energy_delta(u_t: float, s_vn_t: float, u_0: float, s_vn_0: float,
                       kbt_reduced: float) -> tuple[float, float]:
    if kbt_reduced <= 0.0:
        raise ValueError("temperature must be positive")
    df = (u_t - u_0) - kbt_reduced * (s_vn_t - s_vn_0)
    return df, -df / kbt_reduced


def free_energy_change(record_t: "ObservableRecord", record_0: "ObservableRecord",
                       kbt_reduced: float) -> tuple[float, float]:
    """Helmholtz change dF = dU_S - T dS_vN between two trajectory records.

    Returns (dF in reduced energy, -dF/(k_B T)); the second is the
    dimensionless quantity directly comparable with dS_univ.
    Antisymmetric under swapping the two records.
    """
    return _free_energy_delta(
        record_t.u_system, record_t.s_vn, record_0.u_system, record_0.s_vn, kbt_reduced
    )


def boltzmann_fit_temperature(rdm: ReducedDensityMatrix, system_levels: np.ndarray,
                              energy_unit_wavenumbers: float) -> float | None:
    """Least-squares Boltzmann temperature of the RDM diagonal, in Kelvin.

    Diagnostic only; free energies always use the analytic temperature.
    Returns None whenever the fit is unavailable: any non-positive
    population, or a non-positive fitted beta (e.g. maximally mixed).
    """
    pops = rdm.diagonal()
    if np.any(pops <= 0.0):
        return None
    e = np.asarray(system_levels, dtype=float)
    lnp = np.log(pops)
    e_c = e - e.mean()
    denom = float(np.dot(e_c, e_c))
    if denom == 0.0:
        return None
    beta_fit = -float(np.dot(e_c, lnp - lnp.mean())) / denom
    if beta_fit <= 1e-12:
        return None
    t_reduced = 1.0 / beta_fit
    return t_reduced * energy_unit_wavenumbers / units.KB_WAVENUMBER_PER_KELVIN


@dataclass
class ObservableRecord:
    """Everything reported at one time point."""

    time: float
    time_ps: float
    s_vn: float
    s_univ: float
    u_system: float
    delta_f: float
    minus_delta_f_over_kbt: float
    rdm_diagonal: np.ndarray
    shell_partial_entropies: np.ndarray
    t_fit_kelvin: float | None = None

    def validate(self, n_system_levels: int, n_universe_states: int) -> None:
        if not -1e-12 <= self.s_vn <= np.log(n_system_levels) + 1e-9:
            raise ValueError(f"S_vN {self.s_vn} outside [0, ln {n_system_levels}]")
        if not -1e-12 <= self.s_univ <= np.log(n_universe_states) + 1e-9:
            raise ValueError(f"S_univ {self.s_univ} outside [0, ln N_SE]")
        if abs(self.rdm_diagonal.sum() - 1.0) > TRACE_TOL:
            raise ValueError("RDM diagonal does not sum to 1")
        # majorization: the dephased (diagonal) distribution cannot carry
        # less entropy than the RDM spectrum
        s_diag = shannon_entropy(np.clip(self.rdm_diagonal, 0.0, 1.0))
        if s_diag < self.s_vn - 1e-9:
            raise ValueError(
                f"diagonal entropy {s_diag} below eigen-entropy {self.s_vn}"
            )


def observable_record(state: PureState, basis: UniverseBasis,
                      system_levels: np.ndarray, kbt_reduced: float,
                      energy_unit_wavenumbers: float,
                      reference_record: "ObservableRecord | None" = None,
                      with_t_fit: bool = True) -> ObservableRecord:
    """Bundle of all observables for one state.

    With reference_record=None the record describes t = 0 of a
    trajectory and its free-energy change is zero by definition.
    """
    rdm = reduced_density_matrix(state, basis)
    s_vn = von_neumann_entropy(rdm)
    p = state.probabilities()
    s_univ = shannon_entropy(p)
    u = system_energy(rdm, system_levels)
    if reference_record is None:
        df, minus_df_kbt = 0.0, 0.0
    else:
        df, minus_df_kbt = _free_energy_delta(
            u, s_vn, reference_record.u_system, reference_record.s_vn, kbt_reduced
        )
    n_shells = basis.n_system_levels - 1 + basis.degeneracies.size
    return ObservableRecord(
        time=state.time,
        time_ps=units.reduced_time_to_ps(state.time, energy_unit_wavenumbers),
        s_vn=s_vn,
        s_univ=s_univ,
        u_system=u,
        delta_f=df,
        minus_delta_f_over_kbt=minus_df_kbt,
        rdm_diagonal=rdm.diagonal(),
        shell_partial_entropies=shell_partial_entropies(p, basis.shell_label, n_shells),
        t_fit_kelvin=(
            boltzmann_fit_temperature(rdm, system_levels, energy_unit_wavenumbers)
            if with_t_fit else None
        ),
    )
