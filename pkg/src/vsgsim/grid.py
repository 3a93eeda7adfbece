"""Electrical model of the VSG-to-grid connection.

The converter is an ideal EMF ``e`` behind a series impedance ``r + jX``
feeding a stiff grid of phase voltage ``u_g``. All voltages are RMS phase
quantities, so the power expressions below give three-phase totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

OMEGA_50HZ = 100.0 * math.pi


@dataclass(frozen=True)
class GridParams:
    u_g: float = 70.7107
    e: float = 70.7107
    l_filter: float = 7e-3
    l_line: float = 2e-3
    r_line: float = 0.6
    omega_0: float = OMEGA_50HZ

    def __post_init__(self):
        for name in ("u_g", "e", "omega_0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"grid.{name}", f"must be a finite value > 0, got {value!r}")
        for name in ("l_filter", "l_line", "r_line"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"grid.{name}", f"must be a finite value >= 0, got {value!r}")
        if self.l_filter + self.l_line + self.r_line <= 0:
            raise ConfigError("grid.r_line", "impedance is degenerate (r_line, l_filter and l_line all zero)")


@dataclass(frozen=True)
class Impedance:
    r: float
    x: float
    z_mag: float
    alpha: float


def aggregate_impedance(params: GridParams) -> Impedance:
    """Lump filter and line into one series impedance at ``omega_0``.

    The filter capacitor is a shunt branch and is left out.
    """
    r = params.r_line
    x = params.omega_0 * (params.l_filter + params.l_line)
    z_mag = math.hypot(r, x)
    if z_mag == 0:
        raise ConfigError("grid.r_line", "impedance magnitude is zero")
    return Impedance(r=r, x=x, z_mag=z_mag, alpha=math.atan2(x, r))


def power_output(imp: Impedance, e: float, u_g: float, delta: float) -> tuple[float, float]:
    """Active and reactive power delivered to the grid at power angle ``delta``."""
    k = 3.0 * u_g / imp.z_mag
    p_e = k * (e * math.cos(imp.alpha - delta) - u_g * math.cos(imp.alpha))
    q_e = k * (e * math.sin(imp.alpha - delta) - u_g * math.sin(imp.alpha))
    return p_e, q_e


def power_output_simplified(imp: Impedance, e: float, u_g: float, delta: float) -> tuple[float, float]:
    # inductive line, small angle
    p_e = 3.0 * e * u_g / imp.z_mag * delta
    q_e = 3.0 * (e * u_g - u_g * u_g) / imp.z_mag
    return p_e, q_e


def synchronizing_coefficient(imp: Impedance, e: float, u_g: float) -> float:
    """Gain from power angle to active power, ``3 e u_g / |Z|`` in W/rad."""
    return 3.0 * e * u_g / imp.z_mag


def synchronizing_slope(imp: Impedance, e: float, u_g: float, delta: float) -> float:
    """Local slope dP_e/d(delta) of the full power-angle curve at ``delta``.

    Equals :func:`synchronizing_coefficient` only for a lossless line at
    zero angle; with resistance it is smaller by ``sin(alpha - delta)``.
    """
    return 3.0 * e * u_g / imp.z_mag * math.sin(imp.alpha - delta)


def equilibrium_angle(imp: Impedance, e: float, u_g: float, p_e: float) -> float:
    """Power angle on the stable branch of the P-delta curve that delivers ``p_e``."""
    c = (p_e * imp.z_mag / (3.0 * u_g) + u_g * math.cos(imp.alpha)) / e
    if not -1.0 <= c <= 1.0:
        raise ConfigError(
            "scenario.p_initial",
            f"{p_e!r} W is beyond the transfer limit of this grid connection",
        )
    return imp.alpha - math.acos(c)
