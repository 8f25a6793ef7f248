"""Figures of merit computed from sweep and transient results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class AnalysisError(ValueError):
    pass


class EmptyWindow(AnalysisError):
    pass


class InsufficientPoints(AnalysisError):
    pass


class NoKnee(AnalysisError):
    pass


class NoSensitiveRegion(AnalysisError):
    pass


class MissingGeometry(AnalysisError):
    def __init__(self, kind: str, device: str = ""):
        self.kind = kind
        self.device = device
        where = f" (device {device})" if device else ""
        super().__init__(f"no area rule for device kind {kind!r}{where}")


@dataclass(frozen=True)
class ResponseFit:
    log_slope: float            # mV/decade, sign preserved
    log_intercept: float        # V at 1 A
    r_squared: float
    fit_range: tuple


@dataclass(frozen=True)
class KneeReport:
    knee_current: float
    linear_r2: float
    log_r2: float
    linear_range: tuple
    log_range: tuple
    improvement: float


# --------------------------------------------------------------------------
# Swing


def output_swing(tr, node: str, window: Optional[tuple] = None) -> float:
    """Peak-to-peak of ``node`` over ``window`` = (t0, t1) or a boolean mask."""
    trace = tr.node(node)
    if window is None:
        mask = np.ones(trace.size, bool)
    elif isinstance(window, np.ndarray):
        mask = window
    else:
        mask = tr.window(*window)
    vals = trace[mask]
    if vals.size == 0:
        raise EmptyWindow(f"no samples of {node!r} inside the window")
    return float(vals.max() - vals.min())


def post_reset_windows(pulse, tstop: float, settle: float = 0.0) -> list:
    """Intervals where a reset pulse is back at its low level."""
    out = []
    start = 0.0
    k = 0
    while True:
        rise = pulse.delay + k * pulse.period
        if rise >= tstop:
            out.append((start, tstop))
            break
        out.append((start, rise))
        start = rise + pulse.rise + pulse.width + pulse.fall + settle
        k += 1
    return [(a, b) for a, b in out if b > a]


def reset_high_windows(pulse, tstop: float, settle: float = 0.0) -> list:
    out = []
    k = 0
    while True:
        top = pulse.delay + k * pulse.period + pulse.rise
        if top >= tstop:
            break
        end = min(top + pulse.width, tstop)
        if end > top + settle:
            out.append((top + settle, end))
        k += 1
    return out


def mask_for(tr, windows) -> np.ndarray:
    mask = np.zeros(tr.time.size, bool)
    for a, b in windows:
        mask |= tr.window(a, b)
    return mask


# --------------------------------------------------------------------------
# Fits


def _linfit(x, y):
    """Least squares y = a + b x; returns (a, b, sse, r2)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    b = np.sum((x - xm) * (y - ym)) / sxx if sxx > 0 else 0.0
    a = ym - b * xm
    resid = y - (a + b * x)
    sse = float(np.sum(resid ** 2))
    sst = float(np.sum((y - ym) ** 2))
    if sst == 0.0:
        r2 = 1.0 if sse == 0.0 else 0.0
    else:
        r2 = max(0.0, min(1.0, 1.0 - sse / sst))
    return float(a), float(b), sse, r2


def _curve(sw, node):
    ok = np.asarray(sw.converged, bool)
    i = np.asarray(sw.values, float)[ok]
    v = np.asarray(sw.node(node), float)[ok]
    return i, v


def fit_log_slope(sw, node: str, fit_range: tuple) -> ResponseFit:
    lo, hi = fit_range
    i, v = _curve(sw, node)
    sel = (i >= lo * (1 - 1e-9)) & (i <= hi * (1 + 1e-9))
    if sel.sum() < 4:
        raise InsufficientPoints(f"need >= 4 converged points in [{lo:g}, {hi:g}] A, "
                                 f"have {int(sel.sum())}")
    a, b, _, r2 = _linfit(np.log10(i[sel]), v[sel])
    return ResponseFit(1e3 * b, a, r2, (float(i[sel][0]), float(i[sel][-1])))


def fit_log_slope_xy(currents, volts, fit_range):
    """Same as :func:`fit_log_slope` on bare arrays."""
    from types import SimpleNamespace
    sw = SimpleNamespace(values=np.asarray(currents), converged=np.ones(len(currents), bool),
                         node=lambda _: np.asarray(volts))
    return fit_log_slope(sw, "v", fit_range)


MIN_SEGMENT = 3


def detect_knee(sw, node: str, min_improvement: float = 0.05) -> KneeReport:
    """Split the response into a low part linear in I and a high part linear in log10(I).

    Every split point is tried; the knee is the geometric mean of the two
    currents on either side of the best split.
    """
    i, v = _curve(sw, node)
    if i.size < 2 * MIN_SEGMENT:
        raise InsufficientPoints("too few converged points for knee detection")
    decades = math.log10(i[-1] / i[0])
    if decades < 3 - 1e-9 or (i.size - 1) / decades < 8 - 1e-9:
        raise InsufficientPoints("knee detection needs >= 3 decades at >= 8 points/decade")
    logi = np.log10(i)
    single = min(_linfit(i, v)[2], _linfit(logi, v)[2])
    best = None
    for k in range(MIN_SEGMENT, i.size - MIN_SEGMENT + 1):
        lin = _linfit(i[:k], v[:k])
        lg = _linfit(logi[k:], v[k:])
        sse = lin[2] + lg[2]
        if best is None or sse < best[0]:
            best = (sse, k, lin[3], lg[3])
    sse, k, r2_lin, r2_log = best
    sst = float(np.sum((v - v.mean()) ** 2))
    if single <= 1e-12 * max(sst, 1e-30):
        raise NoKnee("a single linear or logarithmic model already fits exactly")
    improvement = 1.0 - sse / single
    if improvement < min_improvement:
        raise NoKnee(f"two-segment fit improves on a single model by only {improvement:.1%}")
    knee = math.sqrt(i[k - 1] * i[k])
    return KneeReport(knee, r2_lin, r2_log, (float(i[0]), float(i[k - 1])),
                      (float(i[k]), float(i[-1])), improvement)


def dynamic_range_db(sw, node: str, sensitivity_floor: float = 0.010) -> float:
    """20 log10(Imax/Imin) over the widest contiguous run with
    |dV/dlog10(I)| >= ``sensitivity_floor`` (V/decade)."""
    i, v = _curve(sw, node)
    if i.size < 2:
        raise NoSensitiveRegion("need at least two converged points")
    slope = np.gradient(v, np.log10(i))
    good = np.abs(slope) >= sensitivity_floor
    best = None
    start = None
    for k, g in enumerate(np.append(good, False)):
        if g and start is None:
            start = k
        elif not g and start is not None:
            if k - 1 > start:
                span = i[k - 1] / i[start]
                if best is None or span > best:
                    best = span
            start = None
    if best is None:
        raise NoSensitiveRegion(f"no region with sensitivity >= {1e3 * sensitivity_floor:g} mV/dec")
    return 20.0 * math.log10(best)


# --------------------------------------------------------------------------
# Power


def instantaneous_power(tr) -> np.ndarray:
    p = np.zeros(tr.time.size)
    for name, i in tr.source_currents.items():
        p += tr.source_voltages[name] * i
    return p


def average_power(tr, circuit=None, window: Optional[tuple] = None) -> float:
    """Time-averaged power delivered by all independent sources (W)."""
    t = tr.time
    p = instantaneous_power(tr)
    if window is not None:
        sel = tr.window(*window)
        t, p = t[sel], p[sel]
    if t.size < 2 or t[-1] <= t[0]:
        return float(p[0]) if p.size else 0.0
    return float(np.trapezoid(p, t) / (t[-1] - t[0]))


# --------------------------------------------------------------------------
# Area

UM2 = 1e-12


@dataclass
class AreaConfig:
    """Per-kind area rules (areas in um^2).

    ``None`` means the rule is not configured; memristors default to their
    card's width x height.
    """

    mosfet_overhead: Optional[float] = 25.0
    capacitor_density_ff_per_um2: Optional[float] = 5.0
    photodiode_area_um2: Optional[float] = 0.0
    vsource_area_um2: Optional[float] = 0.0
    isource_area_um2: Optional[float] = 0.0
    resistor_area_um2: Optional[float] = 0.0
    memristor_area_um2: Optional[float] = None
    calibrated: bool = False


@dataclass
class AreaReport:
    rows: list
    total_um2: float
    calibrated: bool = False


def _device_area(dev, cfg: AreaConfig) -> float:
    k = dev.kind
    if k == "M":
        if cfg.mosfet_overhead is None:
            raise MissingGeometry("mosfet", dev.name)
        return dev.card.w * dev.card.l / UM2 * cfg.mosfet_overhead
    if k == "YMEM":
        if cfg.memristor_area_um2 is not None:
            return cfg.memristor_area_um2
        return dev.card.width * dev.card.height / UM2
    if k == "C":
        if not cfg.capacitor_density_ff_per_um2:
            raise MissingGeometry("capacitor", dev.name)
        return dev.card.c / 1e-15 / cfg.capacitor_density_ff_per_um2
    rule = {"YPD": ("photodiode", cfg.photodiode_area_um2),
            "V": ("vsource", cfg.vsource_area_um2),
            "I": ("isource", cfg.isource_area_um2),
            "R": ("resistor", cfg.resistor_area_um2)}[k]
    if rule[1] is None:
        raise MissingGeometry(rule[0], dev.name)
    return rule[1]


def area_report(circuit, cfg: Optional[AreaConfig] = None) -> AreaReport:
    cfg = cfg or AreaConfig()
    rows = [(d.name, d.kind, _device_area(d, cfg)) for d in circuit.devices]
    total = 0.0
    for _, _, a in rows:
        total += a
    return AreaReport(rows, total, cfg.calibrated)


# --------------------------------------------------------------------------
# Comparison


@dataclass
class PixelReport:
    name: str
    swing: Optional[float] = None
    dynamic_range_db: Optional[float] = None
    avg_power: Optional[float] = None
    total_area: Optional[float] = None      # um^2
    area_rows: list = field(default_factory=list)

    def __post_init__(self):
        if self.swing is not None and self.swing < 0:
            raise ValueError("swing must be non-negative")
        if self.total_area is not None and self.total_area <= 0:
            raise ValueError("area must be positive")


@dataclass
class Comparison:
    reports: list
    reference: str
    area_ratio: list
    power_ratio: list
    swing_ratio: list
    dr_difference_db: list
    notes: list = field(default_factory=list)

    def rows(self):
        for k, r in enumerate(self.reports):
            yield r, self.area_ratio[k], self.power_ratio[k], self.swing_ratio[k], \
                self.dr_difference_db[k]


def _ratio(a, b):
    if a is None or b is None or b == 0:
        return None
    return a / b


def compare_pixels(reports: Sequence[PixelReport], reference: int = -1) -> Comparison:
    """Side-by-side comparison; ratios are each report over ``reports[reference]``."""
    if len(reports) < 2:
        raise ValueError("need at least two reports to compare")
    ref = reports[reference]
    diff = [None if r.dynamic_range_db is None or ref.dynamic_range_db is None
            else r.dynamic_range_db - ref.dynamic_range_db for r in reports]
    return Comparison(
        list(reports), ref.name,
        [_ratio(r.total_area, ref.total_area) for r in reports],
        [_ratio(r.avg_power, ref.avg_power) for r in reports],
        [_ratio(r.swing, ref.swing) for r in reports],
        diff,
    )
