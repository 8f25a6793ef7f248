"""MNA assembly, Newton-Raphson DC analysis, sweeps and transient analysis."""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numeric
from .devices import (
    Dc, IntegratorContext, SourceCard, capacitor_companion, device_current,
    memristance, memristor_dxdt, photodiode_current, stamp,
)
from .netlist import Circuit, ValidationError, validate

log = logging.getLogger(__name__)


class SimulationError(Exception):
    pass


class NonConvergence(SimulationError):
    def __init__(self, message, residual=None, worst=None, t=None, dt=None):
        super().__init__(message)
        self.residual = residual
        self.worst = worst
        self.t = t
        self.dt = dt


class StepUnderflow(NonConvergence):
    pass


class SingularMatrix(SimulationError):
    pass


@dataclass(frozen=True)
class SimOptions:
    abstol: float = 1e-12
    vtol: float = 1e-6
    reltol: float = 1e-4
    max_newton_iters: int = 200
    gmin_steps: tuple = tuple(10.0 ** -k for k in range(3, 13))
    dt_initial: Optional[float] = None
    dt_min: Optional[float] = None
    dt_max: Optional[float] = None
    integrator: str = "trap"
    lte_tol: float = 1e-4
    max_step_voltage: float = 0.5
    adaptive: bool = True

    def __post_init__(self):
        if min(self.abstol, self.vtol, self.reltol, self.lte_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.integrator not in ("trap", "be"):
            raise ValueError("integrator must be 'trap' or 'be'")
        steps = [s for s in (self.dt_min, self.dt_initial, self.dt_max) if s is not None]
        if steps != sorted(steps):
            raise ValueError("need dt_min <= dt_initial <= dt_max")

    def steps_for(self, tstop: float):
        dt_max = self.dt_max or tstop / 50.0
        dt0 = self.dt_initial or min(tstop * 1e-4, dt_max)
        dt_min = self.dt_min or min(tstop * 1e-12, dt0)
        return dt0, dt_min, dt_max


@dataclass
class MnaSystem:
    circuit: Circuit
    gmin: float = 1e-12

    def __post_init__(self):
        self.n_nodes = len(self.circuit.nodes) - 1
        self.vsources = [d for d in self.circuit.devices if d.kind == "V"]
        self.others = [d for d in self.circuit.devices if d.kind != "V"]
        self.memristors = [d for d in self.circuit.devices if d.kind == "YMEM"]
        self.reactive = [d for d in self.circuit.devices if d.kind in ("C", "YPD")]
        self.nonlinear = any(d.kind == "M" or (d.kind == "YPD" and d.card.clamp)
                             for d in self.circuit.devices)
        self.size = self.n_nodes + len(self.vsources)
        labels = [None] * self.n_nodes
        for label, idx in self.circuit.nodes.items():
            if idx:
                labels[idx - 1] = label
        self.labels = labels + [f"i({d.name.lower()})" for d in self.vsources]

    def index(self, label: str) -> int:
        """Unknown-vector position of a node label or ``i(vname)``."""
        return self.labels.index(label.lower())

    def voltages(self, x) -> list:
        return [0.0] + list(x[:self.n_nodes])

    def load(self, x, ctx: IntegratorContext, gmin: float):
        """Linearised MNA matrix and right-hand side around ``x``."""
        n = self.n_nodes
        G = np.zeros((self.size, self.size))
        rhs = np.zeros(self.size)
        v = self.voltages(x)
        for dev in self.others:
            s = stamp(dev, v, ctx)
            for r, c, g in s.conductances:
                if r and c:
                    G[r - 1, c - 1] += g
            for node, i in s.rhs:
                if node:
                    rhs[node - 1] += i
        for k, dev in enumerate(self.vsources):
            a, b = dev.node_ids
            row = n + k
            if a:
                G[a - 1, row] += 1.0
                G[row, a - 1] += 1.0
            if b:
                G[b - 1, row] -= 1.0
                G[row, b - 1] -= 1.0
            rhs[row] = dev.card.wave(ctx.t)
        if gmin:
            G[np.arange(n), np.arange(n)] += gmin
        return G, rhs


def assemble(c: Circuit, gmin: float = 1e-12) -> MnaSystem:
    diags = validate(c)
    if diags:
        raise ValidationError(diags)
    return MnaSystem(c, gmin)


@dataclass
class Solution:
    x: np.ndarray
    states: dict = field(default_factory=dict)
    time: float = 0.0
    iterations: int = 0


def _residual_ok(sys, G, rhs, x, opts):
    res = G @ x - rhs
    n = sys.n_nodes
    scale = np.maximum(np.max(np.abs(G * x), axis=1), np.abs(rhs))
    tol = np.empty_like(res)
    tol[:n] = opts.abstol + opts.reltol * scale[:n]
    tol[n:] = opts.vtol
    return bool(np.all(np.abs(res) <= tol)), res


def _update_ok(sys, dx, x, opts):
    n = sys.n_nodes
    ok_v = np.all(np.abs(dx[:n]) <= opts.vtol + opts.reltol * np.abs(x[:n]))
    ok_i = np.all(np.abs(dx[n:]) <= opts.abstol + opts.reltol * np.abs(x[n:]))
    return bool(ok_v and ok_i)


def newton_solve(sys: MnaSystem, initial: Solution, ctx: IntegratorContext,
                 opts: SimOptions = SimOptions(), gmin: Optional[float] = None,
                 polish: int = 0) -> Solution:
    """Damped Newton on the MNA equations with memristor states frozen.

    Converged when the KCL residual at the iterate and the last update are
    both inside tolerance.  ``polish`` adds extra full Newton steps after
    convergence so warm and cold starts land on the same bits.
    """
    gmin = sys.gmin if gmin is None else gmin
    x = np.array(initial.x, dtype=float)
    if x.shape != (sys.size,) or not np.all(np.isfinite(x)):
        raise ValueError("initial guess must be a finite vector of the system size")
    n = sys.n_nodes
    solves = 0
    update_ok = False
    res = None
    for _ in range(opts.max_newton_iters + 1):
        G, rhs = sys.load(x, ctx, gmin)
        res_ok, res = _residual_ok(sys, G, rhs, x, opts)
        if solves and res_ok and update_ok:
            for _ in range(polish):
                x = numeric.solve(G, rhs)
                G, rhs = sys.load(x, ctx, gmin)
            return Solution(x, dict(ctx.states), ctx.t, solves)
        if solves >= opts.max_newton_iters:
            break
        try:
            x_new = numeric.solve(G, rhs)
        except numeric.SingularMatrixError as exc:
            hint = sys.labels[exc.column] if exc.column < len(sys.labels) else "?"
            raise SingularMatrix(f"{exc}; check for a floating node near {hint!r}") from exc
        solves += 1
        dx = x_new - x
        if not np.all(np.isfinite(dx)):
            break
        # affine systems take the full step, so they converge in one solve
        big = np.abs(dx[:n]) > opts.max_step_voltage if sys.nonlinear else np.zeros(n, bool)
        if np.any(big):
            dx[:n] = np.clip(dx[:n], -opts.max_step_voltage, opts.max_step_voltage)
        # for an affine system the residual test alone certifies the solve
        update_ok = not sys.nonlinear or (not np.any(big) and _update_ok(sys, dx, x, opts))
        x = x + dx
    worst = sys.labels[int(np.argmax(np.abs(res)))] if res is not None else None
    raise NonConvergence(f"Newton failed after {solves} iterations (worst: {worst})",
                         residual=res, worst=worst, t=ctx.t)


def _dc_context(sys: MnaSystem, t: float, states: Optional[dict]) -> IntegratorContext:
    st = {d.name: d.card.x0 for d in sys.memristors}
    if states:
        st.update(states)
    return IntegratorContext(t=t, dt=None, states=st)


def dc_operating_point(sys: MnaSystem, opts: SimOptions = SimOptions(), t: float = 0.0,
                       initial: Optional[np.ndarray] = None, states: Optional[dict] = None,
                       polish: int = 0) -> Solution:
    """DC solution with capacitors open and memristors frozen at their cards' x0."""
    ctx = _dc_context(sys, t, states)
    guess = Solution(np.zeros(sys.size) if initial is None else np.array(initial, float))
    try:
        return newton_solve(sys, guess, ctx, opts, polish=polish)
    except NonConvergence as first:
        log.debug("plain Newton failed (%s); starting gmin stepping", first)
    x = guess.x
    for g in opts.gmin_steps:
        try:
            x = newton_solve(sys, Solution(x), ctx, opts, gmin=g + sys.gmin).x
        except NonConvergence:
            continue
    return newton_solve(sys, Solution(x), ctx, opts, polish=polish)


@dataclass
class SweepResult:
    source: str
    values: np.ndarray
    labels: list
    solutions: np.ndarray
    converged: np.ndarray

    def node(self, label: str) -> np.ndarray:
        return self.solutions[:, self.labels.index(label.lower())]


def _with_source_value(c: Circuit, name: str, value: float) -> Circuit:
    dev = c.device(name)
    if dev.kind == "I":
        return c.replace_device(name, card=SourceCard(Dc(value)))
    if dev.kind == "YPD":
        return c.replace_device(name, card=dataclasses.replace(dev.card, iph=Dc(value)))
    raise ValueError(f"{name} is not a current source or photodiode")


def sweepable_sources(c: Circuit) -> list:
    return [d.name for d in c.devices if d.kind in ("I", "YPD")]


def _check_sweep(c: Circuit, name: str, values) -> np.ndarray:
    try:
        dev = c.device(name)
    except KeyError:
        raise ValueError(f"no source {name!r}; valid: {', '.join(sweepable_sources(c))}") from None
    if dev.kind not in ("I", "YPD"):
        raise ValueError(f"{name} is not sweepable; valid: {', '.join(sweepable_sources(c))}")
    values = np.asarray(values, dtype=float)
    if values.size and np.any(np.diff(values) <= 0):
        raise ValueError("sweep values must be strictly increasing")
    return values


def _dc_points(c: Circuit, name: str, values, opts: SimOptions, warm: bool,
               carry_state: bool):
    sols, ok = [], []
    prev = None
    states = None
    for val in values:
        sys = MnaSystem(_with_source_value(c, name, float(val)))
        try:
            sol = dc_operating_point(sys, opts, initial=prev if warm else None,
                                     states=states, polish=2)
            sols.append(sol.x)
            ok.append(True)
            if warm:
                prev = sol.x
            if carry_state:
                states = sol.states
        except (NonConvergence, SingularMatrix) as exc:
            log.warning("sweep point %s=%g failed: %s", name, val, exc)
            sols.append(np.full(sys.size, np.nan))
            ok.append(False)
    return sols, ok


def _chunks(values, jobs):
    bounds = np.linspace(0, len(values), jobs + 1).astype(int)
    return [values[a:b] for a, b in zip(bounds, bounds[1:]) if b > a]


def dc_sweep(sys: MnaSystem, source_name: str, values, opts: SimOptions = SimOptions(),
             carry_state: bool = False, jobs: int = 1, warm_start: bool = False) -> SweepResult:
    """Sweep a current source or photocurrent.

    Points start cold (gmin stepping as fallback) so the result does not
    depend on how points are split between workers.  ``warm_start`` and
    ``carry_state`` chain points together and therefore run serially.
    """
    c = sys.circuit
    values = _check_sweep(c, source_name, values)
    serial = warm_start or carry_state
    if jobs > 1 and len(values) > 1 and not serial:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(_dc_points, c, source_name, chunk, opts, False, False)
                    for chunk in _chunks(values, jobs)]
            parts = [f.result() for f in futs]
        sols = [s for p in parts for s in p[0]]
        ok = [o for p in parts for o in p[1]]
    else:
        sols, ok = _dc_points(c, source_name, values, opts, warm_start, carry_state)
    return SweepResult(source_name, values, list(sys.labels),
                       np.array(sols).reshape(len(values), sys.size), np.array(ok, bool))


# --------------------------------------------------------------------------
# Transient


@dataclass
class TransientResult:
    time: np.ndarray
    labels: list
    values: np.ndarray
    states: dict
    source_currents: dict
    source_voltages: dict

    def node(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label.lower())]

    def state(self, name: str) -> np.ndarray:
        for k, v in self.states.items():
            if k.lower() == name.lower():
                return v
        raise KeyError(name)

    def window(self, t0: float, t1: float) -> np.ndarray:
        return (self.time >= t0) & (self.time <= t1)


def _breakpoints(c: Circuit, tstop: float) -> list:
    pts = set()
    for d in c.devices:
        wave = getattr(d.card, "wave", None) or getattr(d.card, "iph", None)
        if wave is not None:
            pts.update(t for t in wave.breakpoints(tstop) if 0 < t < tstop)
    pts.add(tstop)
    return sorted(pts)


class _Stepper:
    """Mutable per-run context: capacitor histories and memristor states."""

    def __init__(self, sys: MnaSystem, opts: SimOptions):
        self.sys = sys
        self.opts = opts
        self.history: dict = {}
        self.states: dict = {}

    def init_from_dc(self, sol: Solution):
        v = self.sys.voltages(sol.x)
        for dev in self.sys.reactive:
            a, b = dev.node_ids
            self.history[dev.name] = (v[a] - v[b], 0.0)
        self.states = dict(sol.states)

    def snapshot(self):
        return dict(self.history), dict(self.states)

    def restore(self, snap):
        self.history, self.states = dict(snap[0]), dict(snap[1])

    def memristor_currents(self, x) -> dict:
        v = self.sys.voltages(x)
        out = {}
        for dev in self.sys.memristors:
            a, b = dev.node_ids
            out[dev.name] = (v[a] - v[b]) / memristance(self.states[dev.name], dev.card)
        return out

    def step(self, x_prev, t_new: float, dt: float, method: str):
        """Advance one step of size ``dt`` ending at ``t_new``; commits histories."""
        ctx = IntegratorContext(t=t_new, dt=dt, method=method,
                                history=self.history, states=self.states)
        i_prev = self.memristor_currents(x_prev)
        sol = newton_solve(self.sys, Solution(x_prev), ctx, self.opts)
        v = self.sys.voltages(sol.x)
        new_hist = {}
        for dev in self.sys.reactive:
            a, b = dev.node_ids
            c = dev.card.c if dev.kind == "C" else dev.card.c_pd
            geq, ieq = capacitor_companion(c, ctx, dev.name)
            vab = v[a] - v[b]
            new_hist[dev.name] = (vab, geq * vab + ieq)
        i_new = self.memristor_currents(sol.x)
        new_states = {}
        for dev in self.sys.memristors:
            x0 = self.states[dev.name]
            k_new = memristor_dxdt(x0, i_new[dev.name], dev.card)
            if method == "be":
                xs = x0 + dt * k_new
            else:
                k_old = memristor_dxdt(x0, i_prev[dev.name], dev.card)
                pred = min(max(x0 + dt * k_old, 0.0), 1.0)
                xs = x0 + 0.5 * dt * (k_old + memristor_dxdt(pred, i_new[dev.name], dev.card))
            new_states[dev.name] = min(max(xs, 0.0), 1.0)
        self.history = new_hist
        self.states = new_states
        return sol.x


def _source_traces(sys: MnaSystem, times, xs):
    """Delivered current (out of n+ into the circuit) and voltage per source."""
    cur, volt = {}, {}
    n = sys.n_nodes
    for k, dev in enumerate(sys.vsources):
        cur[dev.name] = -xs[:, n + k]
    for dev in sys.circuit.devices:
        if dev.kind == "I":
            cur[dev.name] = -np.array([dev.card.wave(t) for t in times])
    for dev in sys.circuit.devices:
        if dev.kind in ("V", "I"):
            a, b = dev.node_ids
            va = xs[:, a - 1] if a else np.zeros(len(times))
            vb = xs[:, b - 1] if b else np.zeros(len(times))
            volt[dev.name] = va - vb
    return cur, volt


def _memristor_dt_cap(stepper: _Stepper, x) -> float:
    cap = math.inf
    for dev, i in zip(stepper.sys.memristors, stepper.memristor_currents(x).values()):
        if i:
            cap = min(cap, 0.01 / (dev.card.drift_rate * abs(i)))
    return cap


def transient(sys: MnaSystem, tstop: float, opts: SimOptions = SimOptions(),
              dt: Optional[float] = None, record: bool = True) -> TransientResult:
    """Transient analysis from the t=0 DC operating point.

    With ``opts.adaptive`` the step is controlled by step doubling: each step
    is also taken as two half steps and the difference estimates the local
    truncation error.  ``dt`` forces a fixed step (adaptivity off).
    """
    if tstop <= 0:
        raise ValueError("tstop must be positive")
    method = opts.integrator
    order = 1 if method == "be" else 2
    dt0, dt_min, dt_max = opts.steps_for(tstop)
    fixed = dt is not None or not opts.adaptive
    if fixed:
        dt0 = dt if dt is not None else dt0
    op = dc_operating_point(sys, opts)
    stepper = _Stepper(sys, opts)
    stepper.init_from_dc(op)
    mem_names = [d.name for d in sys.memristors]

    times = [0.0]
    xs = [op.x]
    states = {m: [stepper.states[m]] for m in mem_names}
    bps = _breakpoints(sys.circuit, tstop)
    bp_i = 0
    t = 0.0
    x = op.x
    h = dt0
    eps = 1e-9 * tstop
    while t < tstop - eps:
        while bp_i < len(bps) and bps[bp_i] <= t + eps:
            bp_i += 1
        next_bp = bps[bp_i] if bp_i < len(bps) else tstop
        h_cap = min(h, dt_max if not fixed else h, _memristor_dt_cap(stepper, x))
        h_try = min(h_cap, next_bp - t)
        if next_bp - t - h_try < 0.01 * h_try:
            h_try = next_bp - t
        snap = stepper.snapshot()
        try:
            if fixed:
                x_new = stepper.step(x, t + h_try, h_try, method)
                err_ratio = 0.0
            else:
                x_full = stepper.step(x, t + h_try, h_try, method)
                stepper.restore(snap)
                x_half = stepper.step(x, t + 0.5 * h_try, 0.5 * h_try, method)
                x_new = stepper.step(x_half, t + h_try, 0.5 * h_try, method)
                n = sys.n_nodes
                err = np.abs(x_new[:n] - x_full[:n]) / (2 ** order - 1)
                tol = opts.lte_tol + opts.reltol * np.abs(x_new[:n])
                err_ratio = float(np.max(err / tol)) if n else 0.0
        except (NonConvergence, SingularMatrix) as exc:
            stepper.restore(snap)
            if fixed:
                raise NonConvergence(f"Newton failed at t={t + h_try:.4g}s with fixed dt",
                                     t=t + h_try, dt=h_try) from exc
            h = h_try / 2
            if h < dt_min:
                raise StepUnderflow(f"step underflow at t={t:.4g}s (dt < {dt_min:.3g}s)",
                                    t=t, dt=h) from exc
            continue
        if err_ratio > 1.0:
            stepper.restore(snap)
            h = max(h_try * max(0.9 * err_ratio ** (-1.0 / (order + 1)), 0.2), dt_min)
            if h_try <= dt_min:
                raise StepUnderflow(f"LTE not met at dt_min (t={t:.4g}s)", t=t, dt=h_try)
            continue
        t = t + h_try
        if abs(t - next_bp) <= eps:
            t = next_bp
        x = x_new
        if record or t >= tstop - eps:
            times.append(t)
            xs.append(x)
            for m in mem_names:
                states[m].append(stepper.states[m])
        if not fixed:
            grow = 2.0 if err_ratio == 0 else min(2.0, 0.9 * err_ratio ** (-1.0 / (order + 1)))
            h = min(max(h_try * max(grow, 0.3), dt_min), dt_max)
            if abs(t - next_bp) <= eps and next_bp < tstop:
                h = min(h, dt0)
    times = np.array(times)
    xs = np.array(xs)
    cur, volt = _source_traces(sys, times, xs)
    return TransientResult(times, list(sys.labels), xs,
                           {m: np.array(v) for m, v in states.items()}, cur, volt)


# --------------------------------------------------------------------------
# Integration-mode photoresponse


def _response_points(c: Circuit, name: str, values, t_sample: float, opts: SimOptions):
    out, ok = [], []
    for val in values:
        sys = MnaSystem(_with_source_value(c, name, float(val)))
        try:
            tr = transient(sys, t_sample, opts, record=False)
            out.append(tr.values[-1])
            ok.append(True)
        except (NonConvergence, SingularMatrix) as exc:
            log.warning("response point %s=%g failed: %s", name, val, exc)
            out.append(np.full(sys.size, np.nan))
            ok.append(False)
    return out, ok


def response_sweep(sys: MnaSystem, source_name: str, values, t_sample: float,
                   opts: SimOptions = SimOptions(), jobs: int = 1) -> SweepResult:
    """Per-photocurrent transient, sampled at ``t_sample``.

    This is the integrating (reset, then expose) response of a pixel.  Each
    point is an independent run, so parallel and serial results agree bit
    for bit.
    """
    c = sys.circuit
    values = _check_sweep(c, source_name, values)
    if jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(_response_points, c, source_name, chunk, t_sample, opts)
                    for chunk in _chunks(values, jobs)]
            parts = [f.result() for f in futs]
        sols = [s for p in parts for s in p[0]]
        ok = [o for p in parts for o in p[1]]
    else:
        sols, ok = _response_points(c, source_name, values, t_sample, opts)
    return SweepResult(source_name, values, list(sys.labels),
                       np.array(sols).reshape(len(values), sys.size), np.array(ok, bool))


def log_points(start: float, stop: float, per_decade: int) -> np.ndarray:
    """Log-spaced points including both ends (``decades * ppd + 1`` points)."""
    decades = math.log10(stop / start)
    count = int(round(decades * per_decade)) + 1
    return np.logspace(math.log10(start), math.log10(stop), count)
