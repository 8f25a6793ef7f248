"""SPICE-subset netlists: parser, serializer, validation and builtin pixels.

Grammar (line oriented, case-insensitive, ``*`` comments, ``+`` continues
the previous line)::

    M<name> d g s b [W=] [L=] [TYPE=N|P] [VTH=] [KP=] [N=] [LAMBDA=] [VT=]
    R<name> n1 n2 <value>
    C<name> n1 n2 <value>
    V<name> n+ n- [DC] <v> | PULSE(v1 v2 td tr tf pw per) | PWL(t1 v1 ...)
    I<name> n+ n- (same source syntax as V)
    YMEM <name> n+ n- [RON=] [ROFF=] [D=] [MU=] [X0=] [P=] [WINDOW=]
    YPD <name> n+ n- IPH=<waveform> [CPD=] [IS=] [CLAMP=0|1]
    .title <name>  .param k=v ...  .tran <dt> <tstop>
    .dc <src> <start> <stop> <pts> [dec|lin]  .end
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .devices import (
    CapacitorCard, Dc, MemristorCard, MosfetCard, PhotodiodeCard, Pulse, Pwl,
    ResistorCard, SourceCard, Waveform,
)

GROUND = "0"
KINDS = ("M", "R", "C", "V", "I", "YMEM", "YPD")
TERMINALS = {"M": 4, "R": 2, "C": 2, "V": 2, "I": 2, "YMEM": 2, "YPD": 2}
CONDUCTIVE = {"R", "V", "YMEM", "M"}


class NetlistError(Exception):
    """Base class for netlist parse failures; carries a source location."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class SyntaxError_(NetlistError):
    pass


class UnknownDevicePrefix(NetlistError):
    pass


class DuplicateName(NetlistError):
    pass


# public alias; avoids shadowing the builtin inside this module
NetlistSyntaxError = SyntaxError_


class ValidationError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class DeviceInstance:
    name: str
    kind: str
    terminals: tuple
    card: object
    node_ids: tuple = field(default=(), compare=False, repr=False)


@dataclass
class Circuit:
    name: str = "circuit"
    devices: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    analyses: dict = field(default_factory=dict)
    nodes: dict = field(default_factory=lambda: {GROUND: 0})

    def __post_init__(self):
        self._reindex()

    def _reindex(self) -> None:
        nodes = {GROUND: 0}
        devices = []
        seen = set()
        for dev in self.devices:
            key = dev.name.lower()
            if key in seen:
                raise DuplicateName(f"duplicate device name {dev.name!r}")
            seen.add(key)
            ids = []
            for label in dev.terminals:
                if label not in nodes:
                    nodes[label] = len(nodes)
                ids.append(nodes[label])
            devices.append(dataclasses.replace(dev, node_ids=tuple(ids)))
        self.devices = devices
        self.nodes = nodes

    def add(self, dev: DeviceInstance) -> "Circuit":
        self.devices.append(dev)
        self._reindex()
        return self

    def device(self, name: str) -> DeviceInstance:
        for dev in self.devices:
            if dev.name.lower() == name.lower():
                return dev
        raise KeyError(name)

    def replace_device(self, name: str, **changes) -> "Circuit":
        devices = [dataclasses.replace(d, **changes) if d.name.lower() == name.lower() else d
                   for d in self.devices]
        return Circuit(self.name, devices, dict(self.params), dict(self.analyses))

    def node_index(self, label: str) -> int:
        return self.nodes[label.lower()]

    def node_label(self, index: int) -> str:
        for label, i in self.nodes.items():
            if i == index:
                return label
        raise KeyError(index)


# --------------------------------------------------------------------------
# Values

# decimal exponents, applied in the string so "20u" parses to exactly 2e-05
_SUFFIXES = {"t": 12, "g": 9, "meg": 6, "k": 3, "m": -3, "u": -6, "µ": -6, "n": -9,
             "p": -12, "f": -15}
_NUMBER = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|mil|[tgkmuµnpf])?([a-z]*)$",
    re.IGNORECASE,
)


def parse_value(text: str, params: Optional[dict] = None) -> float:
    """Parse a number with an optional engineering suffix (``1k``, ``10f``, ``2meg``)."""
    s = text.strip()
    if params is not None:
        key = s.strip("{}").lower()
        if key in params:
            return float(params[key])
    m = _NUMBER.match(s)
    if not m:
        raise ValueError(f"not a number: {text!r}")
    suffix = (m.group(2) or "").lower()
    if suffix == "mil":
        return float(m.group(1)) * 25.4e-6
    mant, _, exp = m.group(1).lower().partition("e")
    return float(f"{mant}e{int(exp or 0) + _SUFFIXES.get(suffix, 0)}")


def format_value(v: float) -> str:
    s = np.format_float_scientific(float(v), unique=True, trim="-")
    return s.replace(".e", "e")


# --------------------------------------------------------------------------
# Lexing


@dataclass
class _Token:
    text: str
    col: int


def _tokenize(text: str, line: int, col0: int = 1) -> list:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        start = i
        depth = 0
        while i < n and (depth > 0 or not text[i].isspace()):
            if text[i] == "(":
                depth += 1
            elif text[i] == ")":
                depth -= 1
                if depth < 0:
                    raise SyntaxError_("unbalanced ')'", line, col0 + i)
            i += 1
            # let ``PULSE (..)`` and ``key = value`` stay one token
            if depth == 0 and i < n and text[i].isspace():
                j = i
                while j < n and text[j].isspace():
                    j += 1
                if j < n and (text[j] in "(=" or text[i - 1] == "="):
                    i = j
        if depth != 0:
            raise SyntaxError_("unbalanced '('", line, col0 + start)
        tokens.append(_Token(re.sub(r"\s+", " ", text[start:i]).replace(" (", "(")
                             .replace(" =", "=").replace("= ", "="), col0 + start))
    return tokens


def _logical_lines(text: str):
    """Yield (line number, text) after joining ``+`` continuations."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("*"):
            continue
        if ";" in raw:
            raw = raw[:raw.index(";")]
        if stripped.startswith("+"):
            if current is None:
                raise SyntaxError_("continuation line with nothing to continue", lineno, 1)
            current[1] += " " + raw.strip()[1:]
            continue
        if current is not None:
            yield tuple(current)
        current = [lineno, raw.rstrip()]
    if current is not None:
        yield tuple(current)


# --------------------------------------------------------------------------
# Parsing


def _split_kv(tok: _Token, line: int) -> tuple:
    if "=" not in tok.text:
        raise SyntaxError_(f"expected key=value, got {tok.text!r}", line, tok.col)
    k, _, v = tok.text.partition("=")
    if not k or not v:
        raise SyntaxError_(f"malformed key=value {tok.text!r}", line, tok.col)
    return k.lower(), v


def _num(text: str, tok: _Token, line: int, params: dict) -> float:
    try:
        return parse_value(text, params)
    except ValueError:
        raise SyntaxError_(f"bad numeric value {text!r}", line, tok.col) from None


def _parse_waveform(tokens: list, line: int, params: dict) -> Waveform:
    if not tokens:
        raise SyntaxError_("missing source value", line, 0)
    first = tokens[0]
    head = first.text.lower()
    if head == "dc":
        if len(tokens) != 2:
            raise SyntaxError_("DC expects exactly one value", line, first.col)
        return Dc(_num(tokens[1].text, tokens[1], line, params))
    if len(tokens) != 1:
        raise SyntaxError_(f"unexpected token {tokens[1].text!r}", line, tokens[1].col)
    m = re.fullmatch(r"(pulse|pwl|dc)\((.*)\)", first.text, re.IGNORECASE | re.DOTALL)
    if not m:
        return Dc(_num(first.text, first, line, params))
    kind = m.group(1).lower()
    args = [a for a in re.split(r"[\s,]+", m.group(2).strip()) if a]
    vals = [_num(a, first, line, params) for a in args]
    try:
        if kind == "dc":
            if len(vals) != 1:
                raise ValueError("DC() expects one value")
            return Dc(vals[0])
        if kind == "pulse":
            if len(vals) != 7:
                raise ValueError("PULSE expects 7 values: v1 v2 td tr tf pw per")
            return Pulse(*vals)
        if len(vals) < 2 or len(vals) % 2:
            raise ValueError("PWL expects an even number of values")
        return Pwl(tuple(zip(vals[0::2], vals[1::2])))
    except (ValueError, TypeError) as exc:
        raise SyntaxError_(str(exc), line, first.col) from None


_MOS_KEYS = {"w": "w", "l": "l", "vth": "vth", "kp": "kp", "n": "n_slope",
             "lambda": "lam", "vt": "temp_vt"}
_MEM_KEYS = {"ron": "r_on", "roff": "r_off", "d": "d", "mu": "mu_v", "x0": "x0",
             "p": "p", "width": "width", "height": "height"}


def _parse_device(tokens: list, line: int, params: dict) -> DeviceInstance:
    head = tokens[0]
    word = head.text
    letter = word[0].upper()
    if letter == "Y":
        sub = word.upper()
        if sub not in ("YMEM", "YPD"):
            raise UnknownDevicePrefix(f"unknown Y-device {word!r} (expected YMEM or YPD)",
                                      line, head.col)
        if len(tokens) < 2:
            raise SyntaxError_(f"{sub} needs an instance name", line, head.col)
        kind, name, rest = sub, tokens[1].text, tokens[2:]
    elif letter in "MRCVI":
        kind, name, rest = letter, word, tokens[1:]
    else:
        raise UnknownDevicePrefix(f"unknown device prefix {word[0]!r}", line, head.col)

    nterm = TERMINALS[kind]
    terms = []
    for tok in rest[:nterm]:
        if "=" in tok.text or "(" in tok.text:
            break
        terms.append(tok)
    if len(terms) != nterm:
        col = rest[len(terms)].col if len(terms) < len(rest) else head.col
        raise SyntaxError_(f"{kind} device {name} needs {nterm} terminals, got {len(terms)}",
                           line, col)
    labels = tuple(t.text.lower() for t in terms)
    rest = rest[nterm:]

    try:
        card = _parse_card(kind, name, rest, line, params)
    except NetlistError as exc:
        if not exc.column:
            # nothing to point at: blame the end of the line
            last = tokens[-1]
            raise type(exc)(exc.message, line, last.col + len(last.text)) from None
        raise
    except (ValueError, TypeError) as exc:
        raise SyntaxError_(str(exc), line, head.col) from None
    return DeviceInstance(name, kind, labels, card)


def _parse_card(kind, name, rest, line, params):
    if kind in ("R", "C"):
        if len(rest) != 1:
            col = rest[1].col if len(rest) > 1 else 0
            raise SyntaxError_(f"{name}: expected exactly one value", line, col)
        value = _num(rest[0].text, rest[0], line, params)
        return ResistorCard(value) if kind == "R" else CapacitorCard(value)
    if kind in ("V", "I"):
        return SourceCard(_parse_waveform(rest, line, params))
    kv = {}
    for tok in rest:
        k, v = _split_kv(tok, line)
        if k in kv:
            raise SyntaxError_(f"repeated parameter {k!r}", line, tok.col)
        kv[k] = (v, tok)
    if kind == "M":
        opts = {}
        for k, (v, tok) in kv.items():
            if k == "type":
                if v.upper() not in ("N", "P", "NMOS", "PMOS"):
                    raise SyntaxError_(f"bad MOSFET type {v!r}", line, tok.col)
                opts["polarity"] = v.upper()[0]
            elif k in _MOS_KEYS:
                opts[_MOS_KEYS[k]] = _num(v, tok, line, params)
            else:
                raise SyntaxError_(f"unknown MOSFET parameter {k!r}", line, tok.col)
        if opts.get("polarity") == "P":
            from .devices import pmos_card
            return pmos_card(**opts)
        return MosfetCard(**opts)
    if kind == "YMEM":
        opts = {}
        for k, (v, tok) in kv.items():
            if k == "window":
                opts["window"] = v.lower()
            elif k in _MEM_KEYS:
                val = _num(v, tok, line, params)
                if k == "p":
                    if val != int(val):
                        raise SyntaxError_("P must be an integer", line, tok.col)
                    val = int(val)
                opts[_MEM_KEYS[k]] = val
            else:
                raise SyntaxError_(f"unknown memristor parameter {k!r}", line, tok.col)
        return MemristorCard(**opts)
    # YPD
    opts = {}
    for k, (v, tok) in kv.items():
        if k == "iph":
            opts["iph"] = _parse_waveform([_Token(v, tok.col)], line, params)
        elif k == "cpd":
            opts["c_pd"] = _num(v, tok, line, params)
        elif k == "is":
            opts["i_s"] = _num(v, tok, line, params)
        elif k == "clamp":
            opts["clamp"] = bool(_num(v, tok, line, params))
        else:
            raise SyntaxError_(f"unknown photodiode parameter {k!r}", line, tok.col)
    if "iph" not in opts:
        raise SyntaxError_(f"photodiode {name} needs IPH=", line, rest[0].col if rest else 0)
    return PhotodiodeCard(**opts)


def _parse_directive(tokens, line, circuit_name, params, analyses):
    head = tokens[0]
    word = head.text.lower()
    args = tokens[1:]
    if word == ".end":
        return circuit_name, True
    if word == ".title":
        return (" ".join(t.text for t in args) or circuit_name), False
    if word == ".param":
        if not args:
            raise SyntaxError_(".param needs name=value", line, head.col)
        for tok in args:
            k, v = _split_kv(tok, line)
            params[k] = _num(v, tok, line, params)
    elif word == ".tran":
        if len(args) != 2:
            raise SyntaxError_(".tran expects <dt> <tstop>", line, head.col)
        analyses["tran"] = tuple(_num(t.text, t, line, params) for t in args)
    elif word == ".dc":
        if len(args) not in (4, 5):
            raise SyntaxError_(".dc expects <src> <start> <stop> <pts> [dec|lin]", line, head.col)
        scale = args[4].text.lower() if len(args) == 5 else "lin"
        if scale not in ("dec", "lin"):
            raise SyntaxError_(f"bad sweep scale {args[4].text!r}", line, args[4].col)
        pts = _num(args[3].text, args[3], line, params)
        if pts != int(pts) or pts < 1:
            raise SyntaxError_("point count must be a positive integer", line, args[3].col)
        analyses["dc"] = (args[0].text.lower(),
                          _num(args[1].text, args[1], line, params),
                          _num(args[2].text, args[2], line, params), int(pts), scale)
    else:
        raise SyntaxError_(f"unknown directive {head.text!r}", line, head.col)
    return circuit_name, False


def parse(text: str, name: str = "circuit") -> Circuit:
    params: dict = {}
    analyses: dict = {}
    devices = []
    seen: dict = {}
    ended = False
    for lineno, body in _logical_lines(text):
        if ended:
            raise SyntaxError_("content after .end", lineno, 1)
        offset = len(body) - len(body.lstrip())
        tokens = _tokenize(body.strip(), lineno, offset + 1)
        if not tokens:
            continue
        if tokens[0].text.startswith("."):
            name, ended = _parse_directive(tokens, lineno, name, params, analyses)
            continue
        dev = _parse_device(tokens, lineno, params)
        key = dev.name.lower()
        if key in seen:
            raise DuplicateName(f"device name {dev.name!r} already used on line {seen[key]}",
                                lineno, tokens[0].col)
        seen[key] = lineno
        devices.append(dev)
    return Circuit(name, devices, params, analyses)


# --------------------------------------------------------------------------
# Serialization


def _fmt_wave(w: Waveform) -> str:
    if isinstance(w, Dc):
        return f"DC {format_value(w.value)}"
    if isinstance(w, Pulse):
        vals = (w.v1, w.v2, w.delay, w.rise, w.fall, w.width, w.period)
        return "PULSE(" + " ".join(format_value(v) for v in vals) + ")"
    return "PWL(" + " ".join(f"{format_value(t)} {format_value(v)}" for t, v in w.points) + ")"


def _fmt_inline_wave(w: Waveform) -> str:
    if isinstance(w, Dc):
        return f"DC({format_value(w.value)})"
    return _fmt_wave(w)


def _fmt_device(d: DeviceInstance) -> str:
    nodes = " ".join(d.terminals)
    c = d.card
    if d.kind == "R":
        return f"{d.name} {nodes} {format_value(c.r)}"
    if d.kind == "C":
        return f"{d.name} {nodes} {format_value(c.c)}"
    if d.kind in ("V", "I"):
        return f"{d.name} {nodes} {_fmt_wave(c.wave)}"
    if d.kind == "M":
        return (f"{d.name} {nodes} TYPE={c.polarity} W={format_value(c.w)} L={format_value(c.l)}"
                f" VTH={format_value(c.vth)} KP={format_value(c.kp)} N={format_value(c.n_slope)}"
                f" LAMBDA={format_value(c.lam)} VT={format_value(c.temp_vt)}")
    if d.kind == "YMEM":
        return (f"YMEM {d.name} {nodes} RON={format_value(c.r_on)} ROFF={format_value(c.r_off)}"
                f" D={format_value(c.d)} MU={format_value(c.mu_v)} X0={format_value(c.x0)}"
                f" P={int(c.p)} WINDOW={c.window} WIDTH={format_value(c.width)}"
                f" HEIGHT={format_value(c.height)}")
    return (f"YPD {d.name} {nodes} IPH={_fmt_inline_wave(c.iph)} CPD={format_value(c.c_pd)}"
            f" IS={format_value(c.i_s)} CLAMP={int(c.clamp)}")


def serialize(c: Circuit) -> str:
    lines = []
    if c.name:
        lines.append(f".title {c.name}")
    for k, v in c.params.items():
        lines.append(f".param {k}={format_value(v)}")
    lines.extend(_fmt_device(d) for d in c.devices)
    if "tran" in c.analyses:
        dt, tstop = c.analyses["tran"]
        lines.append(f".tran {format_value(dt)} {format_value(tstop)}")
    if "dc" in c.analyses:
        src, start, stop, pts, scale = c.analyses["dc"]
        lines.append(f".dc {src} {format_value(start)} {format_value(stop)} {pts} {scale}")
    lines.append(".end")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return f"{self.kind}({self.subject}): {self.message}"


class _DisjointSet:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _dc_conductive_pairs(dev: DeviceInstance):
    ids = dev.node_ids
    if dev.kind in ("R", "V", "YMEM"):
        return [(ids[0], ids[1])]
    if dev.kind == "M":
        return [(ids[0], ids[2])]
    if dev.kind == "YPD" and dev.card.clamp and dev.card.i_s > 0:
        return [(ids[0], ids[1])]
    return []


def validate(c: Circuit) -> list:
    diags = []
    if not c.devices:
        return [Diagnostic("EmptyCircuit", c.name, "circuit has no devices")]
    n = len(c.nodes)
    dc = _DisjointSet(n)
    for dev in c.devices:
        for a, b in _dc_conductive_pairs(dev):
            dc.union(a, b)
    ground = dc.find(0)
    for label, idx in c.nodes.items():
        if idx and dc.find(idx) != ground:
            diags.append(Diagnostic("FloatingNode", label,
                                    f"node {label!r} has no DC path to ground"))
    vs = _DisjointSet(n)
    for dev in c.devices:
        if dev.kind == "V":
            a, b = dev.node_ids
            if not vs.union(a, b):
                diags.append(Diagnostic("VoltageSourceLoop", dev.name,
                                        f"{dev.name} closes a loop of voltage sources"))
    return diags


# --------------------------------------------------------------------------
# Builtin pixels

VDD = 1.2
VB_LINLOG = 0.45
BIAS_CURRENT = 10e-6
COUPLING_C = 1e-12
SERIES_C = 1e-12
BUILTINS = ("pixel_3t_log", "pixel_2tm", "pixel_4t_linlog", "pixel_3tm")


def reset_pulse() -> Pulse:
    return Pulse(0.0, VDD, 1e-6, 10e-9, 10e-9, 5e-6, 20e-6)


def _mos(name, d, g, s, card=None):
    return DeviceInstance(name, "M", (d, g, s, "0"), card or MosfetCard())


def _common(iph: Waveform, pd_card: Optional[PhotodiodeCard]):
    card = pd_card or PhotodiodeCard()
    card = dataclasses.replace(card, iph=iph)
    return [
        DeviceInstance("VDD", "V", ("vdd", "0"), SourceCard(Dc(VDD))),
        DeviceInstance("PD", "YPD", ("pd", "0"), card),
    ]


def _readout(follower: str, select: str, gate: str):
    return [
        _mos(follower, "vdd", gate, "x"),
        _mos(select, "x", "vdd", "out"),
        DeviceInstance("IBIAS", "I", ("out", "0"), SourceCard(Dc(BIAS_CURRENT))),
    ]


def _log_front():
    # reset boosts M1's gate above VDD; between pulses M1 is diode connected
    return [
        DeviceInstance("VRST", "V", ("g1", "vdd"), SourceCard(reset_pulse())),
        _mos("M1", "vdd", "g1", "pd"),
    ]


def _pixel_3t_log(iph, pd_card, mem_card):
    devs = _common(iph, pd_card) + _log_front() + _readout("M2", "M3", "pd")
    return Circuit("pixel_3t_log", devs)


def _pixel_2tm(iph, pd_card, mem_card):
    # M2 removed: the memristor || C pair carries the PD potential to the
    # readout transistor M3, which drives the column bias directly
    devs = _common(iph, pd_card) + _log_front() + [
        DeviceInstance("MEM", "YMEM", ("pd", "mg"), mem_card or MemristorCard()),
        DeviceInstance("CM", "C", ("pd", "mg"), CapacitorCard(COUPLING_C)),
        _mos("M3", "vdd", "mg", "out"),
        DeviceInstance("IBIAS", "I", ("out", "0"), SourceCard(Dc(BIAS_CURRENT))),
    ]
    return Circuit("pixel_2tm", devs)


def _linlog_front():
    return [
        DeviceInstance("VRST", "V", ("rst", "0"), SourceCard(reset_pulse())),
        _mos("M1", "vdd", "rst", "pd"),
    ]


def _pixel_4t_linlog(iph, pd_card, mem_card):
    devs = _common(iph, pd_card) + _linlog_front() + [
        DeviceInstance("VB", "V", ("vb", "0"), SourceCard(Dc(VB_LINLOG))),
        _mos("M2", "vdd", "vb", "pd"),
    ] + _readout("M3", "M4", "pd")
    return Circuit("pixel_4t_linlog", devs)


def _pixel_3tm(iph, pd_card, mem_card):
    devs = _common(iph, pd_card) + _linlog_front() + [
        DeviceInstance("MEM", "YMEM", ("vdd", "mx"), mem_card or MemristorCard()),
        DeviceInstance("CS", "C", ("mx", "pd"), CapacitorCard(SERIES_C)),
    ] + _readout("M3", "M4", "pd")
    return Circuit("pixel_3tm", devs)


_BUILDERS = {
    "pixel_3t_log": _pixel_3t_log,
    "pixel_2tm": _pixel_2tm,
    "pixel_4t_linlog": _pixel_4t_linlog,
    "pixel_3tm": _pixel_3tm,
}


def builtin(which: str, iph=10e-9, pd_card: Optional[PhotodiodeCard] = None,
            mem_card: Optional[MemristorCard] = None) -> Circuit:
    """Reference pixel circuit ``which``; ``iph`` is amps or a waveform."""
    try:
        build = _BUILDERS[which]
    except KeyError:
        raise KeyError(f"unknown builtin {which!r}; valid: {', '.join(BUILTINS)}") from None
    wave = iph if isinstance(iph, (Dc, Pulse, Pwl)) else Dc(float(iph))
    return build(wave, pd_card, mem_card)
