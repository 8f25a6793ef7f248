"""Compact device models and their MNA stamps.

Conventions: a two-terminal device's current is positive when it flows from
its first terminal through the device to its second terminal.  MOSFET drain
current is positive from drain to source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

THERMAL_VT = 0.02585
EXP_LIMIT = 80.0


class StateOutOfRange(ValueError):
    pass


def _clamp_exp(u: float) -> float:
    return math.exp(min(max(u, -EXP_LIMIT), EXP_LIMIT))


# --------------------------------------------------------------------------
# Waveforms


@dataclass(frozen=True)
class Dc:
    value: float

    def __call__(self, t: float) -> float:
        return self.value

    def breakpoints(self, tstop: float) -> list[float]:
        return []


@dataclass(frozen=True)
class Pulse:
    v1: float
    v2: float
    delay: float
    rise: float
    fall: float
    width: float
    period: float

    def __post_init__(self):
        if self.rise <= 0 or self.fall <= 0:
            raise ValueError("pulse rise and fall times must be positive")
        if self.period < self.width + self.rise + self.fall:
            raise ValueError("pulse period shorter than rise + width + fall")

    def __call__(self, t: float) -> float:
        if t < self.delay:
            return self.v1
        tt = (t - self.delay) % self.period
        if tt < self.rise:
            return self.v1 + (self.v2 - self.v1) * tt / self.rise
        tt -= self.rise
        if tt < self.width:
            return self.v2
        tt -= self.width
        if tt < self.fall:
            return self.v2 + (self.v1 - self.v2) * tt / self.fall
        return self.v1

    def breakpoints(self, tstop: float) -> list[float]:
        edges = (0.0, self.rise, self.rise + self.width, self.rise + self.width + self.fall)
        out = []
        start = self.delay
        while start < tstop:
            out.extend(start + e for e in edges if start + e <= tstop)
            start += self.period
        return out


@dataclass(frozen=True)
class Pwl:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("PWL needs at least one point")
        times = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("PWL time points must be strictly increasing")

    def __call__(self, t: float) -> float:
        pts = self.points
        if t <= pts[0][0]:
            return pts[0][1]
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if t <= t1:
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        return pts[-1][1]

    def breakpoints(self, tstop: float) -> list[float]:
        return [t for t, _ in self.points if 0.0 <= t <= tstop]


Waveform = Union[Dc, Pulse, Pwl]


def waveform_eval(w: Waveform, t: float) -> float:
    if t < 0:
        raise ValueError("waveforms are defined for t >= 0")
    return w(t)


# --------------------------------------------------------------------------
# Cards


@dataclass(frozen=True)
class MosfetCard:
    polarity: str = "N"
    vth: float = 0.35
    kp: float = 300e-6
    w: float = 360e-9
    l: float = 90e-9
    n_slope: float = 1.3
    lam: float = 0.1
    temp_vt: float = THERMAL_VT

    def __post_init__(self):
        if self.polarity not in ("N", "P"):
            raise ValueError(f"polarity must be N or P, got {self.polarity!r}")
        if self.w <= 0 or self.l <= 0 or self.kp <= 0:
            raise ValueError("w, l and kp must be positive")
        if self.n_slope < 1 or self.temp_vt <= 0:
            raise ValueError("n_slope must be >= 1 and temp_vt > 0")

    @property
    def beta(self) -> float:
        return self.kp * self.w / self.l

    @property
    def ispec(self) -> float:
        return 2.0 * self.n_slope * self.beta * self.temp_vt ** 2


def nmos_card(**overrides) -> MosfetCard:
    return MosfetCard(**{"polarity": "N", **overrides})


def pmos_card(**overrides) -> MosfetCard:
    base = dict(polarity="P", vth=-0.35, kp=120e-6, n_slope=1.4, lam=0.1)
    base.update(overrides)
    return MosfetCard(**base)


WINDOWS = ("joglekar", "biolek", "none")


@dataclass(frozen=True)
class MemristorCard:
    r_on: float = 100.0
    r_off: float = 16e3
    d: float = 10e-9
    mu_v: float = 1e-14
    x0: float = 0.5
    window: str = "joglekar"
    p: int = 2
    width: float = 40e-9
    height: float = 90e-9

    def __post_init__(self):
        if not 0 < self.r_on < self.r_off:
            raise ValueError("need 0 < r_on < r_off")
        if not 0.0 <= self.x0 <= 1.0:
            raise ValueError("x0 must lie in [0, 1]")
        if self.d <= 0 or self.mu_v <= 0:
            raise ValueError("d and mu_v must be positive")
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError("window exponent p must be an integer >= 1")

    @property
    def drift_rate(self) -> float:
        """mu_v * r_on / d**2, in 1/(A s)."""
        return self.mu_v * self.r_on / self.d ** 2


@dataclass(frozen=True)
class PhotodiodeCard:
    iph: Waveform = Dc(10e-9)
    c_pd: float = 10e-15
    i_s: float = 1e-15
    clamp: bool = True

    def __post_init__(self):
        if self.c_pd < 0 or self.i_s < 0:
            raise ValueError("c_pd and i_s must be non-negative")


@dataclass(frozen=True)
class ResistorCard:
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("resistance must be positive")


@dataclass(frozen=True)
class CapacitorCard:
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("capacitance must be non-negative")


@dataclass(frozen=True)
class SourceCard:
    wave: Waveform


# --------------------------------------------------------------------------
# Memristor


def _check_state(x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise StateOutOfRange(f"memristor state {x} outside [0, 1]")


def memristance(x: float, card: MemristorCard) -> float:
    _check_state(x)
    return card.r_on * x + card.r_off * (1.0 - x)


def window_fn(x: float, card: MemristorCard, i_sign: int = 1) -> float:
    _check_state(x)
    p2 = 2 * int(card.p)
    if card.window == "joglekar":
        return 1.0 - (2.0 * x - 1.0) ** p2
    if card.window == "biolek":
        # drift toward x=1 for positive current, toward x=0 otherwise
        stp = 0.0 if i_sign >= 0 else 1.0
        return 1.0 - (x - stp) ** p2
    return 1.0


def memristor_dxdt(x: float, i: float, card: MemristorCard) -> float:
    if i == 0.0:
        return 0.0
    return card.drift_rate * i * window_fn(x, card, 1 if i > 0 else -1)


# --------------------------------------------------------------------------
# MOSFET


def _softplus(u: float) -> float:
    u = min(max(u, -EXP_LIMIT), EXP_LIMIT)
    if u > 30.0:
        return u + math.log1p(math.exp(-u))
    return math.log1p(math.exp(u))


def _sigmoid(u: float) -> float:
    u = min(max(u, -EXP_LIMIT), EXP_LIMIT)
    if u >= 0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


def _nmos_sorted(vg: float, vd: float, vs: float, c: MosfetCard):
    """Current and partials (d/dvg, d/dvd, d/dvs) for vd >= vs."""
    n, vt = c.n_slope, c.temp_vt
    a = (vg - vs - c.vth) / n
    uf = a / (2.0 * vt)
    ur = (a - (vd - vs)) / (2.0 * vt)
    sf, sr = _softplus(uf), _softplus(ur)
    ff, fr = sf * sf, sr * sr
    dff = 2.0 * sf * _sigmoid(uf)
    dfr = 2.0 * sr * _sigmoid(ur)
    ispec = c.ispec
    core = ispec * (ff - fr)
    m = 1.0 + c.lam * (vd - vs)
    k = 1.0 / (2.0 * n * vt)
    dcore_g = ispec * k * (dff - dfr)
    dcore_d = ispec * dfr / (2.0 * vt)
    dcore_s = ispec * (-k * dff - dfr * (1.0 / (2.0 * vt) - k))
    ids = core * m
    return (
        ids,
        dcore_g * m,
        dcore_d * m + core * c.lam,
        dcore_s * m - core * c.lam,
    )


def _nmos_eval(vg: float, vd: float, vs: float, c: MosfetCard):
    if vd >= vs:
        ids, dg, dd, ds = _nmos_sorted(vg, vd, vs, c)
        return ids, dg, dd, ds
    ids, dg, dd, ds = _nmos_sorted(vg, vs, vd, c)
    return -ids, -dg, -ds, -dd


def mosfet_eval(vg: float, vd: float, vs: float, card: MosfetCard):
    """Return (ids, gm, gds, gms) with gms = -d(ids)/d(vs).

    The channel is referenced to the lower-potential end of the channel
    (source of an N device), so there is no body effect; the bulk pin is
    ignored.  P devices are evaluated as mirrored N devices.
    """
    if card.polarity == "N":
        ids, dg, dd, ds = _nmos_eval(vg, vd, vs, card)
        return ids, dg, dd, -ds
    mirrored = MosfetCard("N", -card.vth, card.kp, card.w, card.l,
                          card.n_slope, card.lam, card.temp_vt)
    ids, dg, dd, ds = _nmos_eval(-vg, -vd, -vs, mirrored)
    return -ids, dg, dd, -ds


def mosfet_ids(vg: float, vd: float, vs: float, card: MosfetCard) -> float:
    return mosfet_eval(vg, vd, vs, card)[0]


def mosfet_conductances(vg: float, vd: float, vs: float, card: MosfetCard):
    _, gm, gds, gms = mosfet_eval(vg, vd, vs, card)
    return gm, gds, gms


# --------------------------------------------------------------------------
# Diode / photodiode


def diode_current(vd: float, i_s: float, vt: float = THERMAL_VT) -> float:
    return i_s * (_clamp_exp(vd / vt) - 1.0)


def diode_conductance(vd: float, i_s: float, vt: float = THERMAL_VT) -> float:
    u = vd / vt
    if abs(u) >= EXP_LIMIT:
        return 0.0
    return i_s * math.exp(u) / vt


def photodiode_current(v: float, t: float, card: PhotodiodeCard):
    """Current cathode->anode (excluding the junction capacitance) and d/dv.

    ``v`` is cathode minus anode.  The clamp is the junction itself turning
    on in forward bias.
    """
    i = card.iph(t)
    g = 0.0
    if card.clamp and card.i_s > 0:
        i -= diode_current(-v, card.i_s)
        g = diode_conductance(-v, card.i_s)
    return i, g


# --------------------------------------------------------------------------
# Stamps


@dataclass
class Stamp:
    """Linearised contribution of one device.

    ``conductances`` holds (row node, col node, siemens); ``rhs`` holds
    (node, amps injected into the node).  Node 0 is ground; the assembler
    drops ground rows and columns.
    """

    conductances: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    companion: Optional[tuple] = None

    def add_conductance(self, a: int, b: int, g: float) -> None:
        self.conductances += [(a, a, g), (b, b, g), (a, b, -g), (b, a, -g)]

    def add_branch(self, a: int, b: int, i_eq: float) -> None:
        """Norton current ``i_eq`` flowing a->b inside the device."""
        self.rhs += [(a, -i_eq), (b, i_eq)]


@dataclass
class IntegratorContext:
    """Per-solve context for stamping.

    ``dt`` is None for DC.  ``history`` maps a capacitor-like device name to
    (previous voltage, previous current).
    """

    t: float = 0.0
    dt: Optional[float] = None
    method: str = "trap"
    history: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)


def capacitor_companion(c: float, ctx: IntegratorContext, key: str):
    """(geq, ieq) such that i = geq * v + ieq for the current step."""
    if ctx.dt is None or c == 0.0:
        return 0.0, 0.0
    v_prev, i_prev = ctx.history.get(key, (0.0, 0.0))
    if ctx.method == "be":
        geq = c / ctx.dt
        return geq, -geq * v_prev
    geq = 2.0 * c / ctx.dt
    return geq, -geq * v_prev - i_prev


def stamp(device, v: dict, ctx: IntegratorContext) -> Stamp:
    """Stamp ``device`` linearised around node voltages ``v``.

    ``v`` maps node index to voltage.  Voltage sources are handled by the
    assembler since they add branch unknowns.
    """
    s = Stamp()
    kind = device.kind
    nodes = device.node_ids
    if kind == "R":
        a, b = nodes
        s.add_conductance(a, b, 1.0 / device.card.r)
    elif kind == "C":
        a, b = nodes
        geq, ieq = capacitor_companion(device.card.c, ctx, device.name)
        if geq:
            s.add_conductance(a, b, geq)
            s.add_branch(a, b, ieq)
            s.companion = (geq, ieq)
    elif kind == "YMEM":
        a, b = nodes
        x = ctx.states.get(device.name, device.card.x0)
        s.add_conductance(a, b, 1.0 / memristance(x, device.card))
    elif kind == "I":
        a, b = nodes
        s.add_branch(a, b, device.card.wave(ctx.t))
    elif kind == "YPD":
        a, b = nodes
        vab = v[a] - v[b]
        i, g = photodiode_current(vab, ctx.t, device.card)
        if g:
            s.add_conductance(a, b, g)
        s.add_branch(a, b, i - g * vab)
        geq, ieq = capacitor_companion(device.card.c_pd, ctx, device.name)
        if geq:
            s.add_conductance(a, b, geq)
            s.add_branch(a, b, ieq)
            s.companion = (geq, ieq)
    elif kind == "M":
        d, g, src, _ = nodes
        vg, vd, vs = v[g], v[d], v[src]
        ids, gm, gds, gms = mosfet_eval(vg, vd, vs, device.card)
        s.conductances += [
            (d, g, gm), (d, d, gds), (d, src, -gms),
            (src, g, -gm), (src, d, -gds), (src, src, gms),
        ]
        s.add_branch(d, src, ids - gm * vg - gds * vd + gms * vs)
    elif kind == "V":
        raise ValueError("voltage sources are stamped by the assembler")
    else:
        raise ValueError(f"unknown device kind {kind!r}")
    return s


def device_current(device, v: dict, ctx: IntegratorContext) -> float:
    """Exact (non-linearised) branch current of a two-terminal device or
    MOSFET drain current, consistent with the discretised equations."""
    kind = device.kind
    nodes = device.node_ids
    if kind == "M":
        d, g, src, _ = nodes
        return mosfet_ids(v[g], v[d], v[src], device.card)
    a, b = nodes
    vab = v[a] - v[b]
    if kind == "R":
        return vab / device.card.r
    if kind == "C":
        geq, ieq = capacitor_companion(device.card.c, ctx, device.name)
        return geq * vab + ieq
    if kind == "YMEM":
        x = ctx.states.get(device.name, device.card.x0)
        return vab / memristance(x, device.card)
    if kind == "I":
        return device.card.wave(ctx.t)
    if kind == "YPD":
        i, _ = photodiode_current(vab, ctx.t, device.card)
        geq, ieq = capacitor_companion(device.card.c_pd, ctx, device.name)
        return i + geq * vab + ieq
    raise ValueError(f"no current function for kind {kind!r}")
