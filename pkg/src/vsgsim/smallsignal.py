"""Linear analysis of the active-power loop.

With output-speed feedback the loop from input power to electrical power is
the second-order system

    P_e / P_m = H / (J w0 s^2 + (Dp w0 + H Kt) s + H)

where ``H`` is the synchronizing coefficient. Everything here is derived
from that characteristic polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnstableSystemError


@dataclass(frozen=True)
class LoopParams:
    j: float
    d_p: float
    k_t: float
    h_pdelta: float
    omega_0: float

    def __post_init__(self):
        # j <= 0 is admitted so stability_check can classify it
        if self.j == 0:
            raise ValueError("j must be nonzero")
        if not self.omega_0 > 0:
            raise ValueError("omega_0 must be > 0")
        if not self.h_pdelta > 0:
            raise ValueError("h_pdelta must be > 0")

    @property
    def damping_coefficient(self) -> float:
        """Coefficient ``A`` of s in the characteristic polynomial."""
        return self.d_p * self.omega_0 + self.h_pdelta * self.k_t


@dataclass(frozen=True)
class ModePair:
    s1: complex
    s2: complex
    omega_n: float
    zeta: float


@dataclass(frozen=True)
class StabilityReport:
    a: float
    b: float
    a2_minus_b: float
    k_t_min: float
    k_t_margin: float
    stable: bool
    case: str  # "conjugate_pair" | "negative_real" | "positive_real"


def open_loop_zeta(j: float, d_p: float, h_pdelta: float, omega_0: float) -> float:
    return d_p / 2.0 * math.sqrt(omega_0 / j) * math.sqrt(1.0 / h_pdelta)


def _quadratic_roots(a: float, b: float, c: float) -> tuple[complex, complex]:
    # cancellation-free form; s1 is the root with the more negative real part when b > 0
    disc = b * b - 4.0 * a * c
    if disc < 0:
        re = -b / (2.0 * a)
        im = math.sqrt(-disc) / (2.0 * abs(a))
        return complex(re, -im), complex(re, im)
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0:
        return 0j, 0j
    r1, r2 = q / a, c / q
    return (complex(min(r1, r2)), complex(max(r1, r2)))


def closed_loop_modes(p: LoopParams) -> ModePair:
    if p.j <= 0:
        raise ValueError("closed_loop_modes requires j > 0")
    jw = p.j * p.omega_0
    a = p.damping_coefficient
    s1, s2 = _quadratic_roots(jw, a, p.h_pdelta)
    return ModePair(
        s1=s1,
        s2=s2,
        omega_n=math.sqrt(p.h_pdelta / jw),
        zeta=a / (2.0 * math.sqrt(p.h_pdelta * jw)),
    )


def kt_for_zeta(zeta_target: float, j: float, d_p: float, h_pdelta: float, omega_0: float) -> float:
    """Speed-feedback gain that places the closed-loop damping ratio at ``zeta_target``."""
    return (2.0 * zeta_target * math.sqrt(h_pdelta * j * omega_0) - d_p * omega_0) / h_pdelta


def kt_lower_bound(d_p: float, h_pdelta: float, omega_0: float) -> float:
    """Smallest speed-feedback gain that keeps the loop damping positive (exclusive)."""
    return -d_p * omega_0 / h_pdelta


def stability_check(p: LoopParams) -> StabilityReport:
    a = p.damping_coefficient
    four_jwh = 4.0 * p.j * p.omega_0 * p.h_pdelta
    b = a * a - four_jwh
    if b < 0:
        case = "conjugate_pair"
    elif b < a * a:
        case = "negative_real" if a > 0 else "positive_real"
    else:
        case = "positive_real"
    k_t_min = kt_lower_bound(p.d_p, p.h_pdelta, p.omega_0)
    return StabilityReport(
        a=a,
        b=b,
        a2_minus_b=four_jwh,
        k_t_min=k_t_min,
        k_t_margin=p.k_t - k_t_min,
        stable=bool(a > 0 and p.j > 0),
        case=case,
    )


def step_response_values(p: LoopParams, delta_p: float, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form P_e(t), dP_e/dt and d2P_e/dt2 deviations after a step ``delta_p`` at t = 0.

    Returns the normalized response evaluated elementwise on ``t``.
    """
    t = np.asarray(t, dtype=float)
    jw = p.j * p.omega_0
    a = p.damping_coefficient
    wn = math.sqrt(p.h_pdelta / jw)
    sigma = a / (2.0 * jw)
    b = a * a - 4.0 * jw * p.h_pdelta
    if abs(b) < 1e-12 * a * a:
        # critically damped, s = -wn double
        e = np.exp(-wn * t)
        r = (1.0 + wn * t) * e
        dy = wn * wn * t * e
        ddy = wn * wn * (1.0 - wn * t) * e
    elif b > 0:
        sq = math.sqrt(b) / (2.0 * jw)
        s_fast, s_slow = -sigma - sq, -sigma + sq
        e_fast, e_slow = np.exp(s_fast * t), np.exp(s_slow * t)
        m_fast, m_slow = -s_fast, -s_slow
        # both terms nonnegative and the first dominates, so r >= 0 in floating point
        r = (m_fast * e_slow - m_slow * e_fast) / (m_fast - m_slow)
        dy = m_fast * m_slow * (e_slow - e_fast) / (m_fast - m_slow)
        ddy = m_fast * m_slow * (m_fast * e_fast - m_slow * e_slow) / (m_fast - m_slow)
    else:
        wd = math.sqrt(-b) / (2.0 * jw)
        e = np.exp(-sigma * t)
        c, s = np.cos(wd * t), np.sin(wd * t)
        r = e * (c + sigma / wd * s)
        dy = e * (wn * wn / wd) * s
        ddy = (wn * wn / wd) * e * (wd * c - sigma * s)
    return delta_p * (1.0 - r), delta_p * dy, delta_p * ddy


def analytic_step_response(p: LoopParams, delta_p: float, t_end: float, dt: float):
    """Linear response to an input-power step of ``delta_p`` applied at t = 0.

    Returns a :class:`~vsgsim.simulator.Trace` on a uniform grid, with all
    quantities as deviations from the pre-step equilibrium except ``omega``,
    which is absolute. Raises :class:`UnstableSystemError` for an unstable loop.
    """
    from .simulator import Trace

    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not stability_check(p).stable:
        raise UnstableSystemError(f"loop is unstable (A = {p.damping_coefficient:.6g})")
    n = int(math.floor(t_end / dt + 1e-9)) + 1
    t = np.arange(n) * dt
    p_e, dpe, ddpe = step_response_values(p, delta_p, t)
    delta = p_e / p.h_pdelta
    d_omega = dpe / p.h_pdelta
    full = np.full(n, 1.0)
    return Trace(
        t=t,
        p_m=full * delta_p,
        p_e=p_e,
        q_e=np.zeros(n),
        omega=p.omega_0 + d_omega,
        delta=delta,
        j=full * p.j,
        d_p=full * p.d_p,
        k_t=full * p.k_t,
        domega_dt=ddpe / p.h_pdelta,
        guard_flags=[""] * n,
        omega_0=p.omega_0,
        meta={"strategy": "analytic", "step_time": 0.0, "p_initial": 0.0, "p_final": delta_p},
    )

