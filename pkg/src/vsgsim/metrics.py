"""Transient-quality indices for step responses and cross-strategy comparison."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, fields

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Metrics:
    overshoot_pct: float
    settling_time_s: float | None  # None: never settled within the trace
    max_freq_dev_hz: float
    j_peak: float
    j_peak_ratio: float
    d_p_peak_ratio: float
    k_t_min: float
    k_t_max: float
    freq_violation: bool

    @property
    def k_t_range(self) -> tuple[float, float]:
        return (self.k_t_min, self.k_t_max)

    def as_row(self) -> dict:
        row = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                row[f.name] = "not_settled"
            elif isinstance(v, bool):
                row[f.name] = str(v).lower()
            else:
                row[f.name] = f"{v:.9g}"
        return row


def _post_step(trace, step_time):
    mask = trace.t >= step_time - 1e-12
    if not mask.any():
        raise ValueError(f"no samples at or after step_time={step_time}")
    return trace.t[mask], trace.p_e[mask]


def overshoot(trace, step_time: float, p_initial: float, p_final: float) -> float:
    """Peak excursion beyond ``p_final`` after the step, in percent of the step size."""
    step = p_final - p_initial
    if step == 0:
        raise ValueError("p_final must differ from p_initial")
    _, p = _post_step(trace, step_time)
    excess = np.max(np.sign(step) * (p - p_final))
    return 100.0 * max(0.0, float(excess)) / abs(step)


def settling_time(trace, step_time: float, p_final: float, band_pct: float = 2.0,
                  p_initial: float | None = None) -> float | None:
    """Time from ``step_time`` after which P_e stays inside the band around ``p_final``.

    The band is ``band_pct`` percent of the step size (taken from the trace
    metadata when ``p_initial`` is not given). The exit from the last band
    violation is linearly interpolated between samples. Returns ``None``
    when the trace ends outside the band.
    """
    if p_initial is None:
        p_initial = trace.meta["p_initial"]
    band = band_pct / 100.0 * abs(p_final - p_initial)
    t, p = _post_step(trace, step_time)
    err = np.abs(p - p_final)
    outside = np.nonzero(err > band)[0]
    if outside.size == 0:
        return 0.0
    k = int(outside[-1])
    if k == len(t) - 1:
        return None
    e0, e1 = err[k], err[k + 1]
    frac = (e0 - band) / (e0 - e1) if e0 != e1 else 1.0
    return float(t[k] + frac * (t[k + 1] - t[k]) - step_time)


def max_freq_deviation(trace) -> float:
    return float(np.max(np.abs(trace.omega - trace.omega_0)) / TWO_PI)


def compute_metrics(trace, band_pct: float = 2.0) -> Metrics:
    """All indices for a simulator trace, using the step and nominals recorded in its metadata."""
    m = trace.meta
    step_time, p0, p1 = m["step_time"], m["p_initial"], m["p_final"]
    dev = max_freq_deviation(trace)
    j_peak = float(np.max(trace.j))
    if p1 != p0:
        os_pct = overshoot(trace, step_time, p0, p1)
        ts = settling_time(trace, step_time, p1, band_pct, p_initial=p0)
    else:
        os_pct, ts = 0.0, 0.0
    d_p0 = m.get("d_p0", 0.0)
    return Metrics(
        overshoot_pct=os_pct,
        settling_time_s=ts,
        max_freq_dev_hz=dev,
        j_peak=j_peak,
        j_peak_ratio=j_peak / m["j0"],
        d_p_peak_ratio=float(np.max(trace.d_p)) / d_p0 if d_p0 > 0 else 0.0,
        k_t_min=float(np.min(trace.k_t)),
        k_t_max=float(np.max(trace.k_t)),
        freq_violation=bool(dev > m["delta_f_max"]),
    )


ORDERED_METRICS = ("overshoot_pct", "settling_time_s", "max_freq_dev_hz", "j_peak_ratio")


@dataclass(frozen=True)
class Ordering:
    metric: str
    a: str
    b: str
    a_value: float
    b_value: float
    relation: str  # "<", ">" or "="
    rel_margin: float  # |a - b| / max(|a|, |b|)


@dataclass(frozen=True)
class ComparisonReport:
    metrics: dict  # strategy name -> Metrics, insertion-ordered
    orderings: tuple

    def ordering(self, metric, a, b) -> Ordering:
        for o in self.orderings:
            if o.metric == metric and o.a == a and o.b == b:
                return o
        raise KeyError((metric, a, b))

    def metrics_csv(self) -> str:
        buf = io.StringIO()
        names = [f.name for f in fields(Metrics)]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["strategy", *names])
        for name, met in self.metrics.items():
            row = met.as_row()
            w.writerow([name, *(row[n] for n in names)])
        return buf.getvalue()

    def orderings_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "a", "b", "a_value", "b_value", "relation", "rel_margin"])
        for o in self.orderings:
            w.writerow([o.metric, o.a, o.b, _fmt(o.a_value), _fmt(o.b_value), o.relation, f"{o.rel_margin:.6g}"])
        return buf.getvalue()

    def table(self) -> str:
        cols = ["strategy", "overshoot_%", "settling_s", "max_df_Hz", "J_peak/J0", "Dp_peak/Dp0", "Kt_min", "Kt_max", "f_violation"]
        body = []
        for name, m in self.metrics.items():
            body.append([
                name,
                f"{m.overshoot_pct:.3f}",
                "not settled" if m.settling_time_s is None else f"{m.settling_time_s:.4f}",
                f"{m.max_freq_dev_hz:.4f}",
                f"{m.j_peak_ratio:.3f}",
                f"{m.d_p_peak_ratio:.3f}",
                f"{m.k_t_min:.4g}",
                f"{m.k_t_max:.4g}",
                "yes" if m.freq_violation else "no",
            ])
        widths = [max(len(r[i]) for r in [cols, *body]) for i in range(len(cols))]
        lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in [cols, *body]]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _fmt(v):
    return "not_settled" if v is None else f"{v:.9g}"


def _order(metric, a, b, va, vb) -> Ordering:
    # an unsettled run ranks above any finite settling time
    x = math.inf if va is None else va
    y = math.inf if vb is None else vb
    if x == y:
        rel, margin = "=", 0.0
    else:
        rel = "<" if x < y else ">"
        big = max(abs(x), abs(y))
        margin = 1.0 if math.isinf(big) else abs(x - y) / big
    return Ordering(metric, a, b, va, vb, rel, margin)


def compare(traces: dict, band_pct: float = 2.0) -> ComparisonReport:
    """Metrics for each named trace plus every pairwise ordering.

    All traces must come from the same scenario and time grid.
    """
    if not traces:
        raise ValueError("no traces to compare")
    items = list(traces.items())
    ref_name, ref = items[0]
    for name, tr in items[1:]:
        if tr.meta.get("scenario_key") != ref.meta.get("scenario_key"):
            raise ValueError(f"trace {name!r} comes from a different scenario than {ref_name!r}")
        if len(tr) != len(ref) or not np.array_equal(tr.t, ref.t):
            raise ValueError(f"trace {name!r} has a different time grid than {ref_name!r}")
    mets = {name: compute_metrics(tr, band_pct) for name, tr in items}
    orderings = []
    for (a, ma), (b, mb) in itertools.permutations(mets.items(), 2):
        for metric in ORDERED_METRICS:
            orderings.append(_order(metric, a, b, getattr(ma, metric), getattr(mb, metric)))
    return ComparisonReport(metrics=mets, orderings=tuple(orderings))
