"""Shared domain types and the Lorentzian bath.

Conventions: hbar = 1, rates and frequencies in units of the transition
frequency omega0, times in units of 1/omega0.  Amplitudes are carried in the
frame rotating at omega0 unless a trajectory says otherwise.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

#: slack on |a|^2 <= 1 for numerically produced trajectories
POPULATION_SLACK = 1e-9


class Topology(str, enum.Enum):
    """How the system/ancilla pair couples to the bath."""

    INDEPENDENT = "id"
    COMMON = "common"
    SYSTEM_ONLY = "sys"

    @classmethod
    def parse(cls, value) -> "Topology":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "id": cls.INDEPENDENT, "independent": cls.INDEPENDENT, "independentbaths": cls.INDEPENDENT,
            "common": cls.COMMON, "c": cls.COMMON, "commonbath": cls.COMMON,
            "sys": cls.SYSTEM_ONLY, "system": cls.SYSTEM_ONLY, "systemonly": cls.SYSTEM_ONLY,
            "systemonlybath": cls.SYSTEM_ONLY, "1": cls.SYSTEM_ONLY,
        }
        try:
            return aliases[key.replace("_", "").replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown topology {value!r}; expected one of id, common, sys") from None

    @property
    def channels(self) -> int:
        """Number of independent bath channels (memory variables in the kernel ODE)."""
        return 2 if self is Topology.INDEPENDENT else 1


class Frame(str, enum.Enum):
    ROTATING = "rotating"
    LAB = "lab"


@dataclass(frozen=True)
class SpectralParams:
    """Lorentzian bath: coupling ``gamma0``, width ``lam`` and centre ``omega0``."""

    gamma0: float
    lam: float
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("gamma0", "lam", "omega0"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
        if self.lam <= 0:
            raise DomainError(f"lam must be > 0, got {self.lam}")
        if self.gamma0 < 0:
            raise DomainError(f"gamma0 must be >= 0, got {self.gamma0}")
        if self.omega0 <= 0:
            raise DomainError(f"omega0 must be > 0, got {self.omega0}")

    @property
    def markovian(self) -> bool:
        """Weak-coupling regime, lam > 2*gamma0."""
        return self.lam * (self.lam - 2.0 * self.gamma0) > 0

    @property
    def non_markovian(self) -> bool:
        return self.lam * (self.lam - 2.0 * self.gamma0) < 0

    @property
    def kernel_weight(self) -> float:
        """Kernel value at zero delay, gamma0*lam/2 (total spectral mass)."""
        return 0.5 * self.gamma0 * self.lam


@dataclass(frozen=True)
class ModelConfig:
    topology: Topology
    J: float
    tau: float
    spectral: SpectralParams

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology.parse(self.topology))
        if not (math.isfinite(self.J) and self.J >= 0):
            raise DomainError(f"J must be finite and >= 0, got {self.J}")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise DomainError(f"tau must be finite and > 0, got {self.tau}")

    @classmethod
    def build(cls, topology, gamma0, J, lam=2.0, tau=3.0, omega0=1.0) -> "ModelConfig":
        """Flat-argument constructor used by the CLI and tests."""
        return cls(Topology.parse(topology), float(J), float(tau),
                   SpectralParams(float(gamma0), float(lam), float(omega0)))

    @property
    def gamma0(self) -> float:
        return self.spectral.gamma0

    @property
    def lam(self) -> float:
        return self.spectral.lam


def time_grid(tau: float, n_points: int = 2001) -> np.ndarray:
    """Uniform grid on [0, tau] whose end points are exact."""
    if n_points < 2:
        raise DomainError("a time grid needs at least two points")
    t = np.linspace(0.0, tau, n_points)
    t[-1] = tau
    return t


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    """Sampled excited-state amplitude a(t) of the system and its derivative."""

    times: np.ndarray
    a: np.ndarray
    a_dot: np.ndarray
    frame: Frame = Frame.ROTATING
    source: str = field(default="analytic", compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        a = np.asarray(self.a, dtype=complex)
        a_dot = np.asarray(self.a_dot, dtype=complex)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "a_dot", a_dot)
        object.__setattr__(self, "frame", Frame(self.frame))
        if times.ndim != 1 or times.size < 2:
            raise DomainError("times must be a 1-d grid with at least two points")
        if a.shape != times.shape or a_dot.shape != times.shape:
            raise DomainError("a and a_dot must be sampled on the time grid")
        if times[0] != 0.0:
            raise DomainError("trajectory must start at t = 0")
        if np.any(np.diff(times) <= 0):
            raise DomainError("times must be strictly increasing")
        if abs(a[0] - 1.0) > 1e-12:
            raise DomainError(f"a(0) must be 1, got {a[0]}")
        if np.max(np.abs(a) ** 2) > 1.0 + POPULATION_SLACK:
            raise DomainError("|a(t)|^2 exceeds 1")

    @property
    def tau(self) -> float:
        return float(self.times[-1])

    @property
    def population(self) -> np.ndarray:
        """Excited-state population p(t) = |a(t)|^2."""
        return np.abs(self.a) ** 2

    @property
    def population_rate(self) -> np.ndarray:
        """dp/dt = 2 Re[a_dot conj(a)]; frame independent."""
        return 2.0 * np.real(self.a_dot * np.conj(self.a))

    def to_lab(self, omega0: float = 1.0) -> "AmplitudeTrajectory":
        """Restore the free phase: A = a e^{-i omega0 t}, A_dot = (a_dot - i omega0 a) e^{-i omega0 t}."""
        if self.frame is Frame.LAB:
            return self
        A, A_dot = to_lab_frame(self.times, self.a, self.a_dot, omega0)
        return AmplitudeTrajectory(self.times, A, A_dot, Frame.LAB, self.source)


def to_lab_frame(t, a, a_dot, omega0: float = 1.0):
    phase = np.exp(-1j * omega0 * np.asarray(t))
    return a * phase, (a_dot - 1j * omega0 * a) * phase


def lorentzian_density(omega, p: SpectralParams):
    """Spectral weight (1/2pi) gamma0 lam^2 / ((omega - omega0)^2 + lam^2)."""
    omega = np.asarray(omega, dtype=float)
    out = p.gamma0 * p.lam**2 / (2.0 * np.pi * ((omega - p.omega0) ** 2 + p.lam**2))
    return out[()] if out.ndim == 0 else out


def memory_kernel(dt, p: SpectralParams):
    """Bath correlation function in the rotating frame, (gamma0 lam/2) e^{-lam dt}.

    This is the Fourier transform of :func:`lorentzian_density` with the
    e^{-i omega0 dt} carrier removed.
    """
    dt = np.asarray(dt, dtype=float)
    if np.any(dt < 0):
        raise DomainError("memory kernel is defined for dt >= 0")
    out = (p.kernel_weight * np.exp(-p.lam * dt)).astype(complex)
    return out[()] if out.ndim == 0 else out
