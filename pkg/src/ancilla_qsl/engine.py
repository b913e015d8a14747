"""Bures angle, evolution rates and the unified speed-limit time.

For every topology the reduced state of the system is diag(p, 1 - p) with
p = |a|^2, so its generator is diag(p_dot, -p_dot) and the three norms are
|p_dot|, 2|p_dot| and sqrt(2)|p_dot|.  The time averages of these are the
evolution rates; the largest inverse rate (always the operator norm here)
times sin^2 of the Bures angle is the speed-limit time.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, Infeasible, QuadratureFailure
from .model import AmplitudeTrajectory, ModelConfig

P_SLACK = 1e-12
RATE_TOL = 1e-8


def bures_angle_pure(p_tau: float) -> float:
    """arccos(sqrt(<psi0|rho_tau|psi0>)) for a pure initial state."""
    p = float(p_tau)
    if not (-P_SLACK <= p <= 1.0 + P_SLACK):
        raise DomainError(f"overlap population {p} outside [0, 1]")
    return math.acos(math.sqrt(min(max(p, 0.0), 1.0)))


def matrix_norms(m):
    """(operator, trace, Hilbert-Schmidt) norms of a matrix from its singular values."""
    s = np.linalg.svd(np.asarray(m), compute_uv=False)
    return float(s.max(initial=0.0)), float(s.sum()), math.hypot(*s)


def instantaneous_norms(p_dot):
    """Norms of diag(p_dot, -p_dot), elementwise."""
    x = np.abs(np.asarray(p_dot, dtype=float))
    return x, 2.0 * x, math.sqrt(2.0) * x


def _hermite_abs_integral(t, p, p_dot):
    """Integral of |dp/dt| over the piecewise-cubic Hermite reconstruction.

    On each cell the interpolant's derivative is a quadratic, so every
    sign-definite piece is integrated exactly (Simpson's rule is exact
    there); cells are split at the quadratic's roots, which is where |p_dot|
    has kinks.
    """
    h = np.diff(t)
    p0, p1 = p[:-1], p[1:]
    m0, m1 = h * p_dot[:-1], h * p_dot[1:]
    dp = p1 - p0
    # H'(s) = A s^2 + B s + C on s in [0, 1]
    A = 3.0 * (m0 + m1) - 6.0 * dp
    B = 6.0 * dp - 4.0 * m0 - 2.0 * m1
    C = m0

    def H(s):
        return ((A / 3.0 * s + B / 2.0) * s + C) * s

    # roots of the quadratic in (0, 1); absent roots are parked at s = 1
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = B * B - 4.0 * A * C
        sq = np.sqrt(np.where(disc > 0, disc, np.nan))
        q = -0.5 * (B + np.copysign(sq, B))
        roots = np.stack([q / A, C / q], axis=1)
        linear = A == 0
        roots[linear, 0] = -C[linear] / B[linear]
        roots[linear, 1] = np.nan
    roots = np.where((roots > 0) & (roots < 1), roots, 1.0)
    roots.sort(axis=1)
    s = np.column_stack([np.zeros_like(A), roots, np.ones_like(A)])
    values = H(s[:, :3].T).T
    values = np.column_stack([values, dp])
    total = np.abs(np.diff(values, axis=1)).sum(axis=1)
    return float(np.sum(total))


@dataclass(frozen=True)
class RateEstimate:
    rate_op: float
    rate_tr: float
    rate_hs: float
    abs_integral: float
    error_estimate: float


def evolution_rates(traj: AmplitudeTrajectory) -> RateEstimate:
    """Time-averaged op, trace and Hilbert-Schmidt norms of the generator.

    ``error_estimate`` compares against the same rule on every other
    sample (fourth-order Richardson estimate); nan if the grid cannot be
    halved.
    """
    t, p, pd = traj.times, traj.population, traj.population_rate
    # the triangle inequality, which summation roundoff can break by an ulp
    integral = max(_hermite_abs_integral(t, p, pd), abs(float(p[-1] - p[0])))
    tau = traj.tau
    err = math.nan
    if t.size >= 5 and (t.size - 1) % 2 == 0:
        coarse = _hermite_abs_integral(t[::2], p[::2], pd[::2])
        err = abs(integral - coarse) / 15.0 / tau
    op = integral / tau
    return RateEstimate(op, 2.0 * op, math.sqrt(2.0) * op, integral, err)


@dataclass(frozen=True)
class QsltResult:
    bures_angle: float
    rate_op: float
    rate_tr: float
    rate_hs: float
    tau_qsl: float
    tau: float
    ratio: float
    tight_norm: str
    p_tau: float
    quad_error: float = math.nan
    flags: tuple = field(default=())

    @property
    def bounds(self):
        """The three candidate bounds (op, tr, hs)."""
        s2 = math.sin(self.bures_angle) ** 2
        return tuple(s2 / r if r > 0 else (0.0 if s2 == 0 else math.inf)
                     for r in (self.rate_op, self.rate_tr, self.rate_hs))

    def to_dict(self):
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


def qslt(traj: AmplitudeTrajectory) -> QsltResult:
    """Unified speed-limit time max(1/rate) * sin^2(Bures angle) of a trajectory."""
    rates = evolution_rates(traj)
    p_tau = float(traj.population[-1])
    angle = bures_angle_pure(p_tau)
    numerator = max(0.0, 1.0 - min(p_tau, 1.0))
    flags = []
    inverse = {"op": rates.rate_op, "tr": rates.rate_tr, "hs": rates.rate_hs}
    tau = traj.tau
    if rates.rate_op > 0:
        tight = min(inverse, key=inverse.get)
        # op is tightest, so the ratio is numerator / integral, kept <= 1 exactly
        ratio = numerator * (rates.rate_op / inverse[tight]) / rates.abs_integral
        tau_qsl = ratio * tau
    elif numerator <= P_SLACK:
        tight, tau_qsl, ratio = "op", 0.0, 0.0
        flags.append("zero_dynamics")
    else:
        raise Infeasible(f"zero evolution rate but 1 - p(tau) = {numerator:.3e}")
    return QsltResult(angle, rates.rate_op, rates.rate_tr, rates.rate_hs, tau_qsl, tau,
                      ratio, tight, p_tau, rates.error_estimate, tuple(flags))


def qslt_for(cfg: ModelConfig, source: str = "analytic", n_points: int = 2001,
             tol: float = RATE_TOL, max_refinements: int = 4) -> QsltResult:
    """Build a trajectory for ``cfg`` and evaluate the bound, refining the grid until
    the rate's quadrature error estimate is below ``tol``.
    """
    from .dynamics import analytic_trajectory
    from .oracle import integrate_kernel

    build = {"analytic": analytic_trajectory, "kernel": lambda c, n_points: integrate_kernel(c, n_points=n_points)}
    try:
        make = build[source]
    except KeyError:
        raise ValueError(f"unknown trajectory source {source!r}") from None
    n = n_points if (n_points - 1) % 2 == 0 else n_points + 1
    for _ in range(max_refinements + 1):
        res = qslt(make(cfg, n_points=n))
        if not (res.quad_error > tol):
            return res
        n = 2 * (n - 1) + 1
    raise QuadratureFailure(f"rate quadrature error {res.quad_error:.2e} > {tol:.0e} after refinement for {cfg}")
