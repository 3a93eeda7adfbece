"""Fixed-gain sweeps of the speed-feedback coefficient across the stability bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .controllers import FixedGainStrategy
from .errors import SimulationError
from .simulator import Plant, Scenario, run
from .smallsignal import LoopParams, stability_check

DIVERGED_HZ = 5.0


@dataclass(frozen=True)
class SweepPoint:
    k_t: float
    predicted_stable: bool
    max_dev_hz: float
    final_dev_hz: float
    diverged: bool
    converged: bool


def classify_run(trace, step_time, window, diverge_hz=DIVERGED_HZ, settle_hz=1e-3):
    """Diverged: |df| exceeds ``diverge_hz`` within ``window`` s of the step.
    Converged: |df| at the end is below ``settle_hz`` and below its post-step peak.
    """
    df = np.abs(trace.delta_f_hz)
    mask = (trace.t >= step_time) & (trace.t <= step_time + window)
    peak = float(df[mask].max()) if mask.any() else 0.0
    post = df[trace.t >= step_time]
    final = float(post[-1])
    diverged = peak > diverge_hz
    converged = (not diverged) and final < settle_hz and final <= float(post.max())
    return peak, final, diverged, converged


def kt_grid(k_t_min: float, points: int, span: float) -> np.ndarray:
    """Symmetric grid of gains around ``k_t_min``, spanning +-``span`` times its magnitude.

    An odd ``points`` is rounded up so the bound itself is never sampled.
    """
    n = points + (points % 2)
    offsets = ((np.arange(n) + 0.5) / n * 2.0 - 1.0) * span
    scale = abs(k_t_min) if k_t_min != 0 else 1.0
    return k_t_min + scale * offsets


def kt_sweep(scenario: Scenario, k_t_values, j=None, d_p=None, window=2.0):
    """Run ``scenario`` once per gain in ``k_t_values`` with (j, d_p, k_t) frozen.

    Runs stop at ``step_time + window`` when divergence is detected early, so
    an unstable point never reaches a non-finite state.
    """
    plant = Plant(scenario.grid)
    j = scenario.vsg.j0 if j is None else j
    d_p = scenario.vsg.d_p0 if d_p is None else d_p
    points = []
    for k_t in k_t_values:
        k_t = float(k_t)
        report = stability_check(LoopParams(j=j, d_p=d_p, k_t=k_t, h_pdelta=plant.h_pdelta, omega_0=plant.omega_0))
        strat = FixedGainStrategy(cfg=scenario.vsg, h_pdelta=plant.h_pdelta, omega_0=plant.omega_0,
                                  name="fixed", j=j, d_p=d_p, k_t=k_t)
        sc = scenario
        if not report.stable:
            sc = replace(scenario, duration=min(scenario.duration, scenario.step_time + window))
        try:
            trace = run(sc, strat)
        except SimulationError as exc:
            trace = exc.trace
        peak, final, diverged, converged = classify_run(trace, sc.step_time, window)
        if not math.isfinite(final):
            diverged, converged = True, False
        points.append(SweepPoint(k_t, report.stable, peak, final, diverged, converged))
    return points
