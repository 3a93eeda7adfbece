"""Parameter-scheduling strategies for the VSG active-power loop.

Every strategy maps the instantaneous loop measurements to the three live
tunables (inertia ``j``, droop ``d_p`` and speed-feedback gain ``k_t``).
The simulator samples a strategy once per control period and holds the
result until the next sample.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .smallsignal import kt_for_zeta, kt_lower_bound

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
KT_BOUND_MARGIN = 1e-6

INERTIA_LAWS = ("literal_clamped", "deviation_scaled")


@dataclass(frozen=True)
class VsgConfig:
    """Controller constants for the adaptive law and the baselines.

    ``k1`` and ``k2`` are derived from the inertia bounds and ``delta_f_max``.
    """

    j0: float = 0.0025
    j_min: float = 0.001
    j_max: float = 0.006
    d_p0: float = 0.3
    delta_f_max: float = 0.5
    t_threshold: float = 0.3
    zeta_nominal: float = 1.1
    zeta_boost: float = 1.3
    dpedt_epsilon: float = 1.0
    inertia_law: str = "literal_clamped"
    # baselines
    j_big: float = 0.019
    j_small: float | None = None
    k_dp: float = 15.0
    dp_threshold_hz: float = 0.2
    jdp_j_big: float = 0.018
    jdp_k_dp: float = 3.0

    def __post_init__(self):
        def bad(name, why):
            raise ConfigError(name, f"{why}, got {getattr(self, name)!r}")

        for name in ("j0", "j_min", "j_max", "d_p0", "delta_f_max", "t_threshold",
                     "zeta_nominal", "zeta_boost", "dpedt_epsilon", "j_big", "k_dp",
                     "dp_threshold_hz", "jdp_j_big", "jdp_k_dp"):
            if not math.isfinite(getattr(self, name)):
                bad(name, "must be finite")
        if not self.j0 > 0:
            bad("j0", "must be > 0")
        if not self.j_min > 0:
            bad("j_min", "must be > 0")
        if not self.j_min <= self.j0:
            bad("j0", "must satisfy j_min <= j0")
        if not self.j0 <= self.j_max:
            bad("j_max", "must satisfy j0 <= j_max")
        if self.d_p0 < 0:
            bad("d_p0", "must be >= 0")
        if not self.delta_f_max > 0:
            bad("delta_f_max", "must be > 0")
        if self.t_threshold < 0:
            bad("t_threshold", "must be >= 0")
        if not self.zeta_nominal >= 1:
            bad("zeta_nominal", "must be >= 1")
        if not self.zeta_boost >= self.zeta_nominal:
            bad("zeta_boost", "must be >= zeta_nominal")
        if not self.dpedt_epsilon > 0:
            bad("dpedt_epsilon", "must be > 0")
        if self.inertia_law not in INERTIA_LAWS:
            bad("inertia_law", f"must be one of {', '.join(INERTIA_LAWS)}")
        if not self.j_big > 0:
            bad("j_big", "must be > 0")
        if self.j_small is not None and not (math.isfinite(self.j_small) and self.j_small > 0):
            bad("j_small", "must be > 0")
        if not self.jdp_j_big > 0:
            bad("jdp_j_big", "must be > 0")
        for name in ("k_dp", "dp_threshold_hz", "jdp_k_dp"):
            if getattr(self, name) < 0:
                bad(name, "must be >= 0")

    @property
    def k1(self) -> float:
        return (self.j_max - self.j0) * math.exp(self.delta_f_max)

    @property
    def k2(self) -> float:
        return (self.j0 - self.j_min) * math.exp(self.delta_f_max)

    @property
    def omega_band(self) -> float:
        """Allowed angular-frequency deviation, rad/s."""
        return TWO_PI * self.delta_f_max

    @property
    def j_small_value(self) -> float:
        return self.j0 if self.j_small is None else self.j_small


@dataclass(frozen=True)
class ControlInputs:
    delta_omega: float
    domega_dt: float
    p_m: float
    p_e: float
    dpe_dt: float


@dataclass(frozen=True)
class ControlOutputs:
    j: float
    d_p: float
    k_t: float
    flags: tuple[str, ...] = ()


def _clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


def j_adaptive_term(inputs: ControlInputs, cfg: VsgConfig, flags: list | None = None) -> float:
    """Inertia from the stage rule: add inertia while the frequency runs away,
    shed it while the frequency returns. Valid only inside the frequency band.
    """
    dw, dwdt = inputs.delta_omega, inputs.domega_dt
    if abs(dwdt) <= cfg.t_threshold:
        return cfg.j0
    product = dw * dwdt
    if product == 0:
        return cfg.j0
    dev_hz = abs(dw) / TWO_PI
    if cfg.inertia_law == "literal_clamped":
        weight = math.exp(-dev_hz)
    else:
        weight = math.exp(dev_hz - cfg.delta_f_max)
    if product > 0:
        raw = cfg.j0 + cfg.k1 * weight
        j = _clamp(raw, cfg.j0, cfg.j_max)
    else:
        raw = cfg.j0 - cfg.k2 * weight
        j = _clamp(raw, cfg.j_min, cfg.j0)
    if j != raw and flags is not None:
        flags.append("j_clamp")
    return j


def kt_frequency_limit(
    inputs: ControlInputs,
    cfg: VsgConfig,
    omega_0: float,
    h_pdelta: float,
    flags: list | None = None,
) -> float:
    """Speed-feedback gain that zeroes the virtual acceleration at the sampled state.

    The divisor is kept at least ``dpedt_epsilon`` in magnitude and the result is
    held just above the positive-damping bound.
    """
    numerator = inputs.p_m - inputs.p_e - omega_0 * cfg.d_p0 * inputs.delta_omega
    dpe = inputs.dpe_dt
    if abs(dpe) < cfg.dpedt_epsilon:
        if numerator != 0 and flags is not None:
            flags.append("kt_eps")
        log.debug("dPe/dt=%g below epsilon, guarding division", dpe)
        dpe = math.copysign(cfg.dpedt_epsilon, dpe)
    k_t = numerator / dpe
    floor = kt_lower_bound(cfg.d_p0, h_pdelta, omega_0) + KT_BOUND_MARGIN
    if k_t < floor:
        if flags is not None:
            flags.append("kt_clamp")
        k_t = floor
    return k_t


def proposed_update(inputs: ControlInputs, cfg: VsgConfig, h_pdelta: float, omega_0: float) -> ControlOutputs:
    flags: list[str] = []
    if abs(inputs.delta_omega) < cfg.omega_band:
        j = j_adaptive_term(inputs, cfg, flags)
        zeta = cfg.zeta_boost if abs(inputs.domega_dt) > cfg.t_threshold else cfg.zeta_nominal
        k_t = kt_for_zeta(zeta, j, cfg.d_p0, h_pdelta, omega_0)
    else:
        j = cfg.j0
        k_t = kt_frequency_limit(inputs, cfg, omega_0, h_pdelta, flags)
    return ControlOutputs(j=j, d_p=cfg.d_p0, k_t=k_t, flags=tuple(flags))


def _alternating_inertia(inputs: ControlInputs, cfg: VsgConfig, j_big: float) -> float:
    if abs(inputs.domega_dt) <= cfg.t_threshold:
        return cfg.j0
    product = inputs.delta_omega * inputs.domega_dt
    if product > 0:
        return j_big
    if product < 0:
        return cfg.j_small_value
    return cfg.j0


@dataclass
class Strategy:
    """Base class: a named update rule with a small per-run event log."""

    cfg: VsgConfig
    h_pdelta: float
    omega_0: float
    name: str = "constant"
    events: list = field(default_factory=list)

    def reset(self):
        self.events.clear()

    def update(self, inputs: ControlInputs, dt: float) -> ControlOutputs:
        out = self._update(inputs, dt)
        if out.flags:
            self.events.append(out.flags)
        return out

    def _update(self, inputs, dt):
        return ControlOutputs(self.cfg.j0, self.cfg.d_p0, 0.0)


class ConstantStrategy(Strategy):
    pass


class JAdaptiveStrategy(Strategy):
    def _update(self, inputs, dt):
        return ControlOutputs(_alternating_inertia(inputs, self.cfg, self.cfg.j_big), self.cfg.d_p0, 0.0)


class DpAdaptiveStrategy(Strategy):
    def _update(self, inputs, dt):
        excess = max(0.0, abs(inputs.delta_omega) / TWO_PI - self.cfg.dp_threshold_hz)
        return ControlOutputs(self.cfg.j0, self.cfg.d_p0 + self.cfg.k_dp * excess, 0.0)


class JDpAdaptiveStrategy(Strategy):
    def _update(self, inputs, dt):
        j = _alternating_inertia(inputs, self.cfg, self.cfg.jdp_j_big)
        d_p = self.cfg.d_p0 + self.cfg.jdp_k_dp * abs(inputs.delta_omega) / TWO_PI
        return ControlOutputs(j, d_p, 0.0)


class ProposedStrategy(Strategy):
    def _update(self, inputs, dt):
        return proposed_update(inputs, self.cfg, self.h_pdelta, self.omega_0)


@dataclass
class FixedGainStrategy(Strategy):
    """Holds arbitrary (j, d_p, k_t); used for sweeps and linear-theory checks."""

    j: float = 0.0025
    d_p: float = 0.3
    k_t: float = 0.0

    def _update(self, inputs, dt):
        return ControlOutputs(self.j, self.d_p, self.k_t)


STRATEGIES = {
    "constant": ConstantStrategy,
    "j_adaptive": JAdaptiveStrategy,
    "dp_adaptive": DpAdaptiveStrategy,
    "jdp_adaptive": JDpAdaptiveStrategy,
    "proposed": ProposedStrategy,
}


def make_strategy(name: str, cfg: VsgConfig, h_pdelta: float, omega_0: float) -> Strategy:
    try:
        cls = STRATEGIES[name]
    except KeyError:
        raise ConfigError(
            "strategy", f"unknown strategy {name!r}; valid names: {', '.join(STRATEGIES)}"
        ) from None
    return cls(cfg=cfg, h_pdelta=h_pdelta, omega_0=omega_0, name=name)


def baseline_constant(cfg, h_pdelta=1.0, omega_0=100 * math.pi):
    return ConstantStrategy(cfg, h_pdelta, omega_0, name="constant")


def baseline_j_adaptive(cfg, h_pdelta=1.0, omega_0=100 * math.pi):
    return JAdaptiveStrategy(cfg, h_pdelta, omega_0, name="j_adaptive")


def baseline_dp_adaptive(cfg, h_pdelta=1.0, omega_0=100 * math.pi):
    return DpAdaptiveStrategy(cfg, h_pdelta, omega_0, name="dp_adaptive")


def baseline_jdp_adaptive(cfg, h_pdelta=1.0, omega_0=100 * math.pi):
    return JDpAdaptiveStrategy(cfg, h_pdelta, omega_0, name="jdp_adaptive")
