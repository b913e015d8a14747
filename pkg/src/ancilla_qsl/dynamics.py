"""Closed-form excited-state amplitudes for the three bath topologies.

All amplitudes are in the frame rotating at omega0.  The independent and
common topologies reduce to one or two damped, J-detuned Jaynes-Cummings
modes of the form

    g(t) = e^{-c t} [cosh(w t) + kappa t sinhc(w t)],   sinhc(x) = sinh(x)/x

with c = (lam + iJ)/2, w = d/2 and kappa = (lam - iJ)/2; the coefficient
(lam - iJ)/d multiplying sinh(d t/2) is rewritten as kappa t sinhc so the
d -> 0 limit is removable and the result is manifestly even in d.  The
system-only topology is a three-pole residue sum over the roots of a cubic.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NearDegenerateRoots
from .model import AmplitudeTrajectory, Frame, ModelConfig, Topology, time_grid

#: below this |x| sinh(x)/x is replaced by its series
SINHC_SERIES_BELOW = 1e-6
#: roots closer than this (relative to max |u|) make the residue sum singular
DEGENERATE_RTOL = 1e-8
#: roots closer than this lose more than ~1e-8 absolute accuracy in the residue sum
ILL_CONDITIONED_RTOL = 1e-4


def _sinhc(x):
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < SINHC_SERIES_BELOW
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def _relaxing_mode(t, c, w, kappa):
    """Value and time derivative of e^{-ct}[cosh(wt) + kappa t sinhc(wt)]."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-c * t)
    ch = decay * np.cosh(w * t)
    sh = decay * _sinhc(w * t)
    g = ch + kappa * t * sh
    g_dot = -c * g + w * w * t * sh + kappa * ch
    return g, g_dot


def discriminant_independent(J: float, lam: float, gamma0: float) -> complex:
    """d_id = sqrt(-J^2 - 2iJ lam + lam(lam - 2 gamma0)), principal branch."""
    return cmath.sqrt(-J * J - 2j * J * lam + lam * (lam - 2.0 * gamma0))


def discriminant_common(J: float, lam: float, gamma0: float) -> complex:
    """d_c = sqrt(-J^2 - 2iJ lam + lam(lam - 4 gamma0)), principal branch."""
    return cmath.sqrt(-J * J - 2j * J * lam + lam * (lam - 4.0 * gamma0))


@dataclass(frozen=True)
class CubicRoots:
    """Roots of 2s^3 + 2 lam s^2 + (2J^2 + gamma0 lam)s + 2J^2 lam = 0."""

    u: tuple
    residual: float
    min_separation: float
    degenerate: bool
    ill_conditioned: bool
    tol: float = DEGENERATE_RTOL

    @property
    def u1(self):
        return self.u[0]

    @property
    def u2(self):
        return self.u[1]

    @property
    def u3(self):
        return self.u[2]

    def vieta_errors(self, J: float, lam: float, gamma0: float):
        """Relative errors of the three elementary symmetric functions."""
        u1, u2, u3 = self.u
        expected = (-lam, J * J + 0.5 * gamma0 * lam, -J * J * lam)
        got = (u1 + u2 + u3, u1 * u2 + u1 * u3 + u2 * u3, u1 * u2 * u3)
        scale = max(lam, J * J + 0.5 * gamma0 * lam, J * J * lam, 1.0)
        return tuple(abs(g - e) / scale for g, e in zip(got, expected))


def _cubic_coefficients(J, lam, gamma0):
    return np.array([2.0, 2.0 * lam, 2.0 * J * J + gamma0 * lam, 2.0 * J * J * lam], dtype=float)


def solve_cubic(J: float, lam: float, gamma0: float, tol: float | None = None) -> CubicRoots:
    """Companion-matrix roots of the system-only characteristic cubic.

    Roots are polished with Newton steps and returned sorted by real part,
    then imaginary part, so residue sums are reproducible bit for bit.
    """
    tol = DEGENERATE_RTOL if tol is None else tol
    coeffs = _cubic_coefficients(J, lam, gamma0)
    if not np.all(np.isfinite(coeffs)):
        raise DomainError("cubic coefficients must be finite")
    poly = np.polynomial.Polynomial(coeffs[::-1])
    dpoly = poly.deriv()
    roots = np.roots(coeffs).astype(complex)
    for _ in range(3):
        with np.errstate(all="ignore"):
            trial = roots - poly(roots) / dpoly(roots)
            better = np.isfinite(trial) & (np.abs(poly(trial)) < np.abs(poly(roots)))
        roots = np.where(better, trial, roots)
    # exact-zero root at J = 0 (constant term vanishes)
    if J == 0.0:
        roots[np.argmin(np.abs(roots))] = 0.0
    order = sorted(range(3), key=lambda k: (round(roots[k].real, 12), round(roots[k].imag, 12)))
    roots = roots[order]
    residual = float(np.max(np.abs(poly(roots))) / np.max(np.abs(coeffs)))
    seps = [abs(roots[i] - roots[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    scale = float(np.max(np.abs(roots)))
    min_sep = float(min(seps))
    return CubicRoots(
        u=tuple(complex(r) for r in roots),
        residual=residual,
        min_separation=min_sep,
        degenerate=min_sep < tol * scale,
        ill_conditioned=min_sep < ILL_CONDITIONED_RTOL * scale,
        tol=tol,
    )


@dataclass(frozen=True)
class ClosedFormCoefficients:
    """Time-independent ingredients of a closed-form amplitude.

    ``d`` is the discriminant root (a 3-tuple of cubic roots for the
    system-only topology); ``h_terms`` holds ``(c, w, kappa)`` for the
    relaxing modes, or the residue weights of the cubic poles.
    """

    topology: Topology
    d: object
    h_terms: tuple


def closed_form_coefficients(cfg: ModelConfig, branch: int = 1) -> ClosedFormCoefficients:
    J, lam, g0 = cfg.J, cfg.lam, cfg.gamma0
    if cfg.topology is Topology.INDEPENDENT:
        d = branch * discriminant_independent(J, lam, g0)
        d_twin = branch * discriminant_independent(-J, lam, g0)
        modes = (
            (0.5 * (lam + 1j * J), 0.5 * d, 0.5 * (lam - 1j * J)),
            (0.5 * (lam - 1j * J), 0.5 * d_twin, 0.5 * (lam + 1j * J)),
        )
        return ClosedFormCoefficients(cfg.topology, d, modes)
    if cfg.topology is Topology.COMMON:
        d = branch * discriminant_common(J, lam, g0)
        return ClosedFormCoefficients(cfg.topology, d, ((0.5 * (lam + 1j * J), 0.5 * d, 0.5 * (lam - 1j * J)),))
    roots = solve_cubic(J, lam, g0)
    if J == 0.0 and roots.ill_conditioned:
        # the zero root carries zero weight; what is left is the damped JC pair,
        # whose closed form stays exact through the d = 0 degeneracy
        d = branch * cmath.sqrt(lam * (lam - 2.0 * g0))
        return ClosedFormCoefficients(cfg.topology, d, ((0.5 * lam, 0.5 * d, 0.5 * lam),))
    if roots.degenerate:
        raise NearDegenerateRoots(
            f"cubic roots coincide (min separation {roots.min_separation:.3e}) "
            f"at gamma0={g0}, J={J}, lam={lam}"
        )
    u = roots.u
    weights = []
    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        weights.append(u[i] * (lam + u[i]) / ((u[i] - u[j]) * (u[i] - u[k])))
    return ClosedFormCoefficients(cfg.topology, u, tuple(weights))


def _check_times(t, cfg: ModelConfig):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > cfg.tau * (1 + 1e-12)):
        raise DomainError(f"t must lie in [0, tau={cfg.tau}]")
    return t


def _evaluate(t, coeffs: ClosedFormCoefficients, J: float):
    if coeffs.topology is Topology.INDEPENDENT:
        g1, g1_dot = _relaxing_mode(t, *coeffs.h_terms[0])
        g2, g2_dot = _relaxing_mode(t, *coeffs.h_terms[1])
        return 0.5 * (g1 + g2), 0.5 * (g1_dot + g2_dot)
    if coeffs.topology is Topology.COMMON:
        g, g_dot = _relaxing_mode(t, *coeffs.h_terms[0])
        free = np.exp(1j * J * t)
        return 0.5 * (free + g), 0.5 * (1j * J * free + g_dot)
    if len(coeffs.h_terms) == 1:
        return _relaxing_mode(t, *coeffs.h_terms[0])
    a = np.zeros(np.shape(t), dtype=complex)
    a_dot = np.zeros(np.shape(t), dtype=complex)
    for u, w in zip(coeffs.d, coeffs.h_terms):
        e = w * np.exp(u * t)
        a = a + e
        a_dot = a_dot + u * e
    return a, a_dot


def _scalar(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x


def _amplitude_for(topology: Topology, t, cfg: ModelConfig, branch: int):
    if cfg.topology is not topology:
        raise DomainError(f"config topology is {cfg.topology.value}, expected {topology.value}")
    t = _check_times(t, cfg)
    a, _ = _evaluate(t, closed_form_coefficients(cfg, branch), cfg.J)
    return _scalar(a)


def amplitude_independent(t, cfg: ModelConfig, branch: int = 1):
    """a_id(t) for independent baths: the mean of two conjugate-detuned JC modes."""
    return _amplitude_for(Topology.INDEPENDENT, t, cfg, branch)


def amplitude_common(t, cfg: ModelConfig, branch: int = 1):
    """a_c(t) = (e^{iJt} + e^{-(lam+iJ)t/2} h_c)/2 for a shared bath."""
    return _amplitude_for(Topology.COMMON, t, cfg, branch)


def amplitude_system_only(t, cfg: ModelConfig, branch: int = 1):
    """a_1(t) as a residue sum over the cubic roots.

    Raises NearDegenerateRoots when two roots coincide.  At J = 0 with
    nearly coincident roots the damped Jaynes-Cummings form is used instead.
    """
    return _amplitude_for(Topology.SYSTEM_ONLY, t, cfg, branch)


def amplitude(t, cfg: ModelConfig, branch: int = 1):
    return _scalar(amplitude_and_derivative(t, cfg, branch)[0])


def amplitude_derivative(t, cfg: ModelConfig, branch: int = 1):
    """Exact da/dt of the closed form (rotating frame)."""
    return _scalar(amplitude_and_derivative(t, cfg, branch)[1])


def amplitude_and_derivative(t, cfg: ModelConfig, branch: int = 1):
    t = _check_times(t, cfg)
    return _evaluate(t, closed_form_coefficients(cfg, branch), cfg.J)


def damped_jc_amplitude(t, lam: float, gamma0: float):
    """Single emitter in a Lorentzian bath: e^{-lam t/2}(cosh(dt/2) + (lam/d) sinh(dt/2))."""
    d = cmath.sqrt(lam * (lam - 2.0 * gamma0))
    return _scalar(_relaxing_mode(t, 0.5 * lam, 0.5 * d, 0.5 * lam)[0])


def amplitude_common_literal(t, cfg: ModelConfig):
    """Common-bath amplitude with h_c's first term read as cos instead of cosh.

    Kept only to demonstrate that this reading disagrees with the dynamics.
    """
    t = _check_times(t, cfg)
    J, lam = cfg.J, cfg.lam
    d = discriminant_common(J, lam, cfg.gamma0)
    h = np.cos(0.5 * d * t) + (lam - 1j * J) * 0.5 * t * _sinhc(0.5 * d * t)
    return _scalar(0.5 * (np.exp(1j * J * t) + np.exp(-0.5 * (lam + 1j * J) * t) * h))


def analytic_trajectory(cfg: ModelConfig, times=None, n_points: int = 2001) -> AmplitudeTrajectory:
    """Sample the closed form and its exact derivative on a grid over [0, tau]."""
    if times is None:
        times = time_grid(cfg.tau, n_points)
    a, a_dot = amplitude_and_derivative(times, cfg)
    a = np.asarray(a, dtype=complex).copy()
    a_dot = np.asarray(a_dot, dtype=complex).copy()
    # pin the initial condition; the formulas give it only to rounding
    a[0], a_dot[0] = 1.0, 0.0
    return AmplitudeTrajectory(np.asarray(times, dtype=float), a, a_dot, Frame.ROTATING, "analytic")
