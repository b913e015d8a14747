"""Numerical ground truths for the amplitude dynamics.

Two routes that share nothing with the closed forms:

* :func:`integrate_kernel` eliminates the bath exactly.  Because the
  Lorentzian kernel is a single exponential, each bath channel collapses to
  one auxiliary variable z with dz/dt = -lam z + (source), and the amplitude
  feels -(gamma0 lam/2) z.
* :func:`integrate_discrete_bath` keeps the bath, discretised into N modes,
  and propagates the full single-excitation Schroedinger equation.

Everything is in the frame rotating at omega0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh

from .errors import DomainError, NormDrift, StepSizeUnderflow
from .model import AmplitudeTrajectory, Frame, ModelConfig, SpectralParams, Topology, lorentzian_density, time_grid

KERNEL_RTOL = 1e-10
KERNEL_ATOL = 1e-12
NORM_TOL = 1e-8


# -- kernel reduction --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelHistory:
    """Kernel-ODE state on a grid.

    ``states`` columns are ``[a, b, z...]`` with one memory variable per bath
    channel.
    """

    cfg: ModelConfig
    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray

    @property
    def a(self):
        return self.states[:, 0]

    @property
    def b(self):
        return self.states[:, 1]

    @property
    def z(self):
        return self.states[:, 2:]


def initial_kernel_state(topology: Topology) -> np.ndarray:
    y0 = np.zeros(2 + topology.channels, dtype=complex)
    y0[0] = 1.0
    return y0


def kernel_rhs(cfg: ModelConfig):
    """Right-hand side f(t, y) of the reduced ODE for ``cfg.topology``."""
    J, lam, k = cfg.J, cfg.lam, cfg.spectral.kernel_weight
    topo = cfg.topology

    if topo is Topology.INDEPENDENT:
        def rhs(t, y):
            a, b, za, zb = y
            return np.array([-1j * J * b - k * za, -1j * J * a - k * zb, a - lam * za, b - lam * zb])
    elif topo is Topology.COMMON:
        def rhs(t, y):
            a, b, z = y
            return np.array([-1j * J * b - k * z, -1j * J * a - k * z, a + b - lam * z])
    else:
        def rhs(t, y):
            a, b, z = y
            return np.array([-1j * J * b - k * z, -1j * J * a, a - lam * z])
    return rhs


def solve_kernel(cfg: ModelConfig, grid=None, rtol: float = KERNEL_RTOL, atol: float = KERNEL_ATOL,
                 n_points: int = 2001) -> KernelHistory:
    if grid is None:
        grid = time_grid(cfg.tau, n_points)
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must start at 0 and increase strictly")
    rhs = kernel_rhs(cfg)
    y0 = initial_kernel_state(cfg.topology)
    if grid[-1] == 0.0:
        states = y0[None, :]
    else:
        sol = solve_ivp(rhs, (0.0, grid[-1]), y0, method="DOP853", t_eval=grid, rtol=rtol, atol=atol)
        if sol.status != 0:
            raise StepSizeUnderflow(f"kernel integration failed for {cfg}: {sol.message}")
        states = sol.y.T.copy()
    states[0] = y0
    derivs = np.array([rhs(t, y) for t, y in zip(grid, states)])
    return KernelHistory(cfg, grid, states, derivs)


def integrate_kernel(cfg: ModelConfig, grid=None, **kw) -> AmplitudeTrajectory:
    """System amplitude from the exact exponential-kernel reduction.

    Derivative samples are the ODE right-hand side, not differences.
    """
    hist = solve_kernel(cfg, grid, **kw)
    return AmplitudeTrajectory(hist.times, hist.a, hist.derivatives[:, 0], Frame.ROTATING, "kernel")


# -- discretised bath ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteBath:
    """Finite set of bath modes with frequencies ``omega`` and couplings ``g``."""

    omega: np.ndarray
    g: np.ndarray
    omega0: float = 1.0

    def __post_init__(self):
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if omega.shape != g.shape or omega.size < 1:
            raise DomainError("need at least one mode with matching frequency and coupling")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "g", g)

    @classmethod
    def lorentzian(cls, spectral: SpectralParams, n_modes: int = 1024, half_width: float | None = None):
        """Midpoint discretisation of the Lorentzian on omega0 +- half_width.

        The default window is 20 lam.  |g_k|^2 = I(omega_k) d_omega.
        """
        if n_modes < 1:
            raise DomainError("n_modes must be >= 1")
        W = 20.0 * spectral.lam if half_width is None else float(half_width)
        dw = 2.0 * W / n_modes
        omega = spectral.omega0 - W + dw * (np.arange(n_modes) + 0.5)
        g = np.sqrt(lorentzian_density(omega, spectral) * dw)
        return cls(omega, g, spectral.omega0)

    @property
    def n_modes(self) -> int:
        return self.omega.size

    @property
    def detuning(self) -> np.ndarray:
        return self.omega - self.omega0

    @property
    def total_coupling(self) -> float:
        return float(np.sum(self.g**2))


def window_mass_fraction(spectral: SpectralParams, half_width: float) -> float:
    """Share of the Lorentzian's spectral mass inside omega0 +- half_width."""
    return float(2.0 / np.pi * np.arctan(half_width / spectral.lam))


def bath_hamiltonian(cfg: ModelConfig, bath: DiscreteBath) -> np.ndarray:
    """Single-excitation Hamiltonian in the rotating frame.

    Basis: |eg>, |ge>, then the bath modes (one block per channel; the
    system's block first for independent baths).
    """
    n = bath.n_modes
    topo = cfg.topology
    dim = 2 + topo.channels * n
    H = np.zeros((dim, dim))
    H[0, 1] = H[1, 0] = cfg.J
    delta = bath.detuning
    if topo is Topology.INDEPENDENT:
        sa, sb = slice(2, 2 + n), slice(2 + n, 2 + 2 * n)
        H[0, sa] = H[sa, 0] = bath.g
        H[1, sb] = H[sb, 1] = bath.g
        H[sa, sa] = np.diag(delta)
        H[sb, sb] = np.diag(delta)
    else:
        s = slice(2, 2 + n)
        H[0, s] = H[s, 0] = bath.g
        if topo is Topology.COMMON:
            H[1, s] = H[s, 1] = bath.g
        H[s, s] = np.diag(delta)
    return H


@dataclass(frozen=True, eq=False)
class BathHistory:
    """Full single-excitation state; ``psi`` is ``None`` unless requested."""

    cfg: ModelConfig
    bath: DiscreteBath
    times: np.ndarray
    a: np.ndarray
    a_dot: np.ndarray
    psi: np.ndarray | None
    max_norm_drift: float


def solve_discrete_bath(cfg: ModelConfig, bath: DiscreteBath, grid=None, keep_state: bool = False,
                        n_points: int = 2001, norm_tol: float = NORM_TOL) -> BathHistory:
    """Propagate exactly through the eigen-decomposition of the (real symmetric) Hamiltonian."""
    if grid is None:
        grid = time_grid(cfg.tau, n_points)
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must start at 0 and increase strictly")
    H = bath_hamiltonian(cfg, bath)
    E, V = eigh(H)
    c0 = V[0, :]  # overlaps <n|eg>
    phases = np.exp(-1j * np.outer(grid, E))
    weights = c0 * c0
    a = phases @ weights
    a_dot = phases @ (-1j * E * weights)
    if keep_state:
        psi = (phases * c0) @ V.T
        psi[0] = 0.0
        psi[0, 0] = 1.0
        norms = np.sum(np.abs(psi) ** 2, axis=1)
    else:
        psi = None
        idx = np.unique(np.linspace(0, grid.size - 1, min(grid.size, 32)).astype(int))
        norms = np.sum(np.abs((phases[idx] * c0) @ V.T) ** 2, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > norm_tol:
        raise NormDrift(f"state norm drifted by {drift:.3e}")
    a = a.copy()
    a_dot = a_dot.copy()
    a[0], a_dot[0] = 1.0, 0.0
    return BathHistory(cfg, bath, grid, a, a_dot, psi, drift)


def integrate_discrete_bath(cfg: ModelConfig, bath: DiscreteBath | None = None, grid=None,
                            **kw) -> AmplitudeTrajectory:
    if bath is None:
        bath = DiscreteBath.lorentzian(cfg.spectral)
    hist = solve_discrete_bath(cfg, bath, grid, **kw)
    return AmplitudeTrajectory(hist.times, hist.a, hist.a_dot, Frame.ROTATING, "discrete")


# -- conservation audit -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BalanceReport:
    """Excitation bookkeeping per time step.

    ``total`` is |A|^2 + |B|^2 + (bath population) where the bath part is
    known; ``absorbed`` is the population held by the bath.
    """

    times: np.ndarray
    system: np.ndarray
    ancilla: np.ndarray
    absorbed: np.ndarray
    total: np.ndarray

    @property
    def deviation(self) -> np.ndarray:
        return self.total - 1.0

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.deviation)))


def excitation_balance(history) -> BalanceReport:
    """Audit |A|^2 + |B|^2 + sum|C_k|^2 (+ sum|D_k|^2) against 1.

    For a discrete-bath history (with ``keep_state=True``) every term is
    explicit.  For a kernel history the bath is eliminated, so the absorbed
    share is inferred as 1 - |a|^2 - |b|^2 and the deviation measures only
    the excess over 1.
    """
    if isinstance(history, BathHistory):
        if history.psi is None:
            raise DomainError("balance needs the full state; solve with keep_state=True")
        pops = np.abs(history.psi) ** 2
        system, ancilla = pops[:, 0], pops[:, 1]
        absorbed = np.sum(pops[:, 2:], axis=1)
        return BalanceReport(history.times, system, ancilla, absorbed, system + ancilla + absorbed)
    if isinstance(history, KernelHistory):
        system = np.abs(history.a) ** 2
        ancilla = np.abs(history.b) ** 2
        absorbed = 1.0 - system - ancilla
        total = np.maximum(system + ancilla, 1.0)
        return BalanceReport(history.times, system, ancilla, absorbed, total)
    raise TypeError(f"cannot audit {type(history).__name__}")
