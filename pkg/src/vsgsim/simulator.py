"""Fixed-step simulation of the nonlinear VSG active-power loop.

State is the power angle ``delta`` and the virtual angular frequency
``omega``. The controller is sampled at the start of every step and its
outputs are held (zero-order hold) while a classical four-stage Runge-Kutta
step advances the plant; electrical power is recomputed from ``delta`` at
every stage.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .controllers import ControlInputs, ControlOutputs, Strategy, VsgConfig, make_strategy
from .errors import ConfigError, SimulationError
from .grid import (
    GridParams,
    Impedance,
    aggregate_impedance,
    equilibrium_angle,
    power_output,
    power_output_simplified,
    synchronizing_coefficient,
)

TWO_PI = 2.0 * math.pi

TRACE_COLUMNS = (
    "t", "p_m", "p_e", "q_e", "omega", "delta_f_hz", "delta",
    "j", "d_p", "k_t", "domega_dt", "guard_flags",
)

POWER_MODELS = ("full", "small_angle")


@dataclass(frozen=True)
class Plant:
    """Grid connection reduced to what the swing dynamics need."""

    grid: GridParams
    power_model: str = "full"
    imp: Impedance = field(init=False)
    h_pdelta: float = field(init=False)

    def __post_init__(self):
        if self.power_model not in POWER_MODELS:
            raise ValueError(f"power_model must be one of {POWER_MODELS}")
        imp = aggregate_impedance(self.grid)
        object.__setattr__(self, "imp", imp)
        object.__setattr__(self, "h_pdelta", synchronizing_coefficient(imp, self.grid.e, self.grid.u_g))

    @property
    def omega_0(self) -> float:
        return self.grid.omega_0

    def power(self, delta: float) -> tuple[float, float]:
        if self.power_model == "full":
            return power_output(self.imp, self.grid.e, self.grid.u_g, delta)
        return power_output_simplified(self.imp, self.grid.e, self.grid.u_g, delta)

    def p_e(self, delta: float) -> float:
        return self.power(delta)[0]

    def dpe_dt(self, omega: float) -> float:
        # E held constant, so the dE/dt term vanishes
        return self.h_pdelta * (omega - self.grid.omega_0)

    def accel(self, delta, omega, p_m, j, d_p, k_t) -> float:
        w0 = self.grid.omega_0
        dw = omega - w0
        return (p_m - self.p_e(delta) - k_t * self.h_pdelta * dw - d_p * w0 * dw) / (j * w0)

    def equilibrium_angle(self, p_e: float) -> float:
        if self.power_model == "full":
            return equilibrium_angle(self.imp, self.grid.e, self.grid.u_g, p_e)
        return p_e / self.h_pdelta


@dataclass(frozen=True)
class VsgState:
    t: float
    delta: float
    omega: float
    p_m: float
    p_e: float
    j: float
    d_p: float
    k_t: float
    dpe_dt: float
    domega_dt: float


def dpe_dt_analytic(state: VsgState, imp: Impedance, e: float, u_g: float, omega_0: float) -> float:
    """Rate of change of electrical power for constant EMF: ``3 e u_g/|Z| * (omega - omega_0)``."""
    return synchronizing_coefficient(imp, e, u_g) * (state.omega - omega_0)


def derivative(state: VsgState, p_m: float, outputs: ControlOutputs, plant: Plant) -> tuple[float, float]:
    """(d delta/dt, d omega/dt) of the swing dynamics with speed feedback."""
    return (
        state.omega - plant.omega_0,
        plant.accel(state.delta, state.omega, p_m, outputs.j, outputs.d_p, outputs.k_t),
    )


def _rk4(plant: Plant, delta, omega, p_m, j, d_p, k_t, dt):
    w0 = plant.grid.omega_0
    f = plant.accel
    k1d = omega - w0
    k1w = f(delta, omega, p_m, j, d_p, k_t)
    d2, w2 = delta + 0.5 * dt * k1d, omega + 0.5 * dt * k1w
    k2d = w2 - w0
    k2w = f(d2, w2, p_m, j, d_p, k_t)
    d3, w3 = delta + 0.5 * dt * k2d, omega + 0.5 * dt * k2w
    k3d = w3 - w0
    k3w = f(d3, w3, p_m, j, d_p, k_t)
    d4, w4 = delta + dt * k3d, omega + dt * k3w
    k4d = w4 - w0
    k4w = f(d4, w4, p_m, j, d_p, k_t)
    return (
        delta + dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
        omega + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    )


def sample_controller(state: VsgState, p_m: float, strategy: Strategy, plant: Plant, dt: float) -> ControlOutputs:
    """Sample the strategy at ``state`` with input power ``p_m``.

    The acceleration handed to the controller is the model derivative under
    the outputs currently held in ``state``.
    """
    domega_dt = plant.accel(state.delta, state.omega, p_m, state.j, state.d_p, state.k_t)
    inputs = ControlInputs(
        delta_omega=state.omega - plant.omega_0,
        domega_dt=domega_dt,
        p_m=p_m,
        p_e=state.p_e,
        dpe_dt=state.dpe_dt,
    )
    out = strategy.update(inputs, dt)
    if not (out.j > 0 and math.isfinite(out.j) and math.isfinite(out.d_p) and math.isfinite(out.k_t)):
        raise SimulationError(-1, f"strategy {strategy.name!r} produced invalid outputs {out}")
    return out


def advance(state: VsgState, p_m: float, outputs: ControlOutputs, plant: Plant, dt: float) -> VsgState:
    """One RK4 step with ``outputs`` and ``p_m`` held constant."""
    delta, omega = _rk4(plant, state.delta, state.omega, p_m, outputs.j, outputs.d_p, outputs.k_t, dt)
    return VsgState(
        t=state.t + dt,
        delta=delta,
        omega=omega,
        p_m=p_m,
        p_e=plant.p_e(delta),
        j=outputs.j,
        d_p=outputs.d_p,
        k_t=outputs.k_t,
        dpe_dt=plant.dpe_dt(omega),
        domega_dt=plant.accel(delta, omega, p_m, outputs.j, outputs.d_p, outputs.k_t),
    )


def step(state: VsgState, p_m: float, strategy: Strategy, plant: Plant, dt: float) -> tuple[VsgState, ControlOutputs]:
    """Sample the controller at the step start, then integrate one step."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    outputs = sample_controller(state, p_m, strategy, plant, dt)
    return advance(state, p_m, outputs, plant, dt), outputs


@dataclass(frozen=True)
class Scenario:
    grid: GridParams = field(default_factory=GridParams)
    vsg: VsgConfig = field(default_factory=VsgConfig)
    duration: float = 12.0
    dt: float = 2e-4
    p_initial: float = 157.0
    q_initial: float = 0.0  # informational only
    events: tuple[tuple[float, float], ...] = ((6.0, 600.0),)
    strategy: str = "proposed"

    def __post_init__(self):
        object.__setattr__(self, "events", tuple((float(t), float(p)) for t, p in self.events))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("scenario.dt", f"must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ConfigError("scenario.duration", f"must be > 0, got {self.duration!r}")
        if not math.isfinite(self.p_initial):
            raise ConfigError("scenario.p_initial", "must be finite")
        prev = -math.inf
        for k, (t, p) in enumerate(self.events):
            if not (math.isfinite(t) and math.isfinite(p)):
                raise ConfigError(f"scenario.events[{k}]", "time and p_m must be finite")
            if t < 0:
                raise ConfigError(f"scenario.events[{k}].time", "must be >= 0")
            if t <= prev:
                raise ConfigError(f"scenario.events[{k}].time", "events must be sorted strictly by time")
            prev = t
        if self.events and self.duration < self.events[-1][0]:
            raise ConfigError("scenario.duration", "must be >= the last event time")

    @property
    def n_rows(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9)) + 1

    @property
    def step_time(self) -> float:
        return self.events[0][0] if self.events else 0.0

    @property
    def p_final(self) -> float:
        return self.events[-1][1] if self.events else self.p_initial

    def key(self) -> str:
        """Digest of everything except the strategy name; equal keys mean comparable runs."""
        return hashlib.sha1(repr(replace(self, strategy="")).encode()).hexdigest()[:16]

    def p_m_schedule(self) -> np.ndarray:
        """Input power at every row of the time grid."""
        n = self.n_rows
        pm = np.full(n, float(self.p_initial))
        for t, p in self.events:
            first = int(math.ceil(t / self.dt - 1e-9))
            if first < n:
                pm[first:] = p
        return pm


@dataclass
class Trace:
    t: np.ndarray
    p_m: np.ndarray
    p_e: np.ndarray
    q_e: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    j: np.ndarray
    d_p: np.ndarray
    k_t: np.ndarray
    domega_dt: np.ndarray
    guard_flags: list
    omega_0: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def delta_f_hz(self) -> np.ndarray:
        return (self.omega - self.omega_0) / TWO_PI

    def columns(self) -> dict:
        return {
            "t": self.t, "p_m": self.p_m, "p_e": self.p_e, "q_e": self.q_e,
            "omega": self.omega, "delta_f_hz": self.delta_f_hz, "delta": self.delta,
            "j": self.j, "d_p": self.d_p, "k_t": self.k_t, "domega_dt": self.domega_dt,
        }

    def write_csv(self, fh) -> None:
        cols = self.columns()
        numeric = [cols[name].tolist() for name in TRACE_COLUMNS[:-1]]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for i in range(len(self)):
            w.writerow([f"{col[i]:.9g}" for col in numeric] + [self.guard_flags[i]])

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            self.write_csv(fh)

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _build_trace(rows: dict, n: int, flags: list, scenario: Scenario, plant: Plant, strategy_name: str) -> Trace:
    arr = {k: np.asarray(v[:n], dtype=float) for k, v in rows.items()}
    return Trace(
        **arr,
        guard_flags=flags[:n],
        omega_0=plant.omega_0,
        meta={
            "strategy": strategy_name,
            "scenario_key": scenario.key(),
            "step_time": scenario.step_time,
            "p_initial": scenario.p_initial,
            "p_final": scenario.p_final,
            "j0": scenario.vsg.j0,
            "d_p0": scenario.vsg.d_p0,
            "delta_f_max": scenario.vsg.delta_f_max,
            "dt": scenario.dt,
        },
    )


def initial_state(scenario: Scenario, plant: Plant) -> VsgState:
    """Equilibrium at ``p_initial`` and nominal frequency, nominal controller outputs held."""
    delta0 = plant.equilibrium_angle(scenario.p_initial)
    cfg = scenario.vsg
    w0 = plant.omega_0
    return VsgState(
        t=0.0, delta=delta0, omega=w0, p_m=scenario.p_initial, p_e=plant.p_e(delta0),
        j=cfg.j0, d_p=cfg.d_p0, k_t=0.0, dpe_dt=0.0,
        domega_dt=plant.accel(delta0, w0, scenario.p_initial, cfg.j0, cfg.d_p0, 0.0),
    )


def run(scenario: Scenario, strategy: Strategy | None = None, power_model: str = "full") -> Trace:
    """Simulate ``scenario`` from t = 0 to ``duration``.

    ``strategy`` defaults to the one named in the scenario. Raises
    :class:`SimulationError` carrying the partial trace if the state stops
    being finite.
    """
    plant = Plant(scenario.grid, power_model=power_model)
    if strategy is None:
        strategy = make_strategy(scenario.strategy, scenario.vsg, plant.h_pdelta, plant.omega_0)
    strategy.reset()
    dt = scenario.dt
    n = scenario.n_rows
    pm_sched = scenario.p_m_schedule()
    rows = {k: [] for k in ("t", "p_m", "p_e", "q_e", "omega", "delta", "j", "d_p", "k_t", "domega_dt")}
    flags: list[str] = []
    state = initial_state(scenario, plant)
    for i in range(n):
        t = i * dt
        p_m = float(pm_sched[i])
        try:
            out = sample_controller(state, p_m, strategy, plant, dt)
        except SimulationError as exc:
            raise SimulationError(i, str(exc), _build_trace(rows, i, flags, scenario, plant, strategy.name)) from None
        p_e, q_e = plant.power(state.delta)
        rows["t"].append(t)
        rows["p_m"].append(p_m)
        rows["p_e"].append(p_e)
        rows["q_e"].append(q_e)
        rows["omega"].append(state.omega)
        rows["delta"].append(state.delta)
        rows["j"].append(out.j)
        rows["d_p"].append(out.d_p)
        rows["k_t"].append(out.k_t)
        rows["domega_dt"].append(plant.accel(state.delta, state.omega, p_m, out.j, out.d_p, out.k_t))
        flags.append("|".join(out.flags))
        if i == n - 1:
            break
        state = advance(state, p_m, out, plant, dt)
        state = replace(state, t=(i + 1) * dt)
        if not (math.isfinite(state.delta) and math.isfinite(state.omega)) or state.omega <= 0:
            raise SimulationError(
                i + 1,
                f"non-finite or non-positive state (delta={state.delta!r}, omega={state.omega!r})",
                _build_trace(rows, i + 1, flags, scenario, plant, strategy.name),
            )
    return _build_trace(rows, n, flags, scenario, plant, strategy.name)
