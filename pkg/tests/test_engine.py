import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from conftest import bisect, circuit, sine_pwl
from pixsim.devices import IntegratorContext, MemristorCard, memristor_dxdt, mosfet_ids, nmos_card
from pixsim.engine import (
    MnaSystem, NonConvergence, SimOptions, Solution, assemble, dc_operating_point, dc_sweep,
    log_points, newton_solve, response_sweep, transient,
)
from pixsim.netlist import Circuit, ValidationError, builtin, parse

DIVIDER = "V1 in 0 DC 1.2\nR1 in mid 1k\nR2 mid 0 1k\n"


def residual_ok(sys, sol, opts=SimOptions()):
    """KCL recheck at the returned point, independent of the solver loop."""
    ctx = IntegratorContext(t=sol.time, states=sol.states)
    G, rhs = sys.load(sol.x, ctx, sys.gmin)
    res = G @ sol.x - rhs
    n = sys.n_nodes
    scale = np.maximum(np.max(np.abs(G * sol.x), axis=1), np.abs(rhs))
    return (np.all(np.abs(res[:n]) <= opts.abstol + opts.reltol * scale[:n])
            and np.all(np.abs(res[n:]) <= opts.vtol))


# ---- assembly


def test_layout_sizes():
    sys = circuit(DIVIDER)
    assert sys.size == 3
    assert sys.labels == ["in", "mid", "i(v1)"]
    p = assemble(builtin("pixel_3t_log"))
    assert p.size == len(p.circuit.nodes) - 1 + 2


def test_empty_and_floating_circuits_rejected():
    with pytest.raises(ValidationError):
        assemble(Circuit())
    with pytest.raises(ValidationError):
        circuit("C1 a 0 1p\nI1 0 a 1n")


# ---- DC


def test_divider_one_step():
    sys = assemble(parse(DIVIDER), gmin=0.0)
    sol = newton_solve(sys, Solution(np.zeros(3)), IntegratorContext())
    assert sol.iterations == 1
    assert sol.x[sys.index("mid")] == pytest.approx(0.6, abs=1e-15)
    # the default node shunt moves it by gmin * R / 2
    loaded = dc_operating_point(circuit(DIVIDER))
    assert loaded.iterations == 1
    assert loaded.x[1] == pytest.approx(0.6, abs=1e-9)
    assert sol.x[sys.index("i(v1)")] == pytest.approx(-0.6e-3, rel=1e-9)


def test_diode_resistor_matches_bisection():
    sys = circuit("V1 in 0 DC 1\nR1 in a 1k\nYPD d1 0 a IPH=0 CPD=0 IS=1f")
    vt = 0.02585
    oracle = bisect(lambda v: (1 - v) / 1e3 - 1e-15 * math.expm1(v / vt), 0.0, 1.0)
    va = dc_operating_point(sys).x[sys.index("a")]
    assert va == pytest.approx(oracle, abs=1e-6)


def test_diode_connected_nmos_matches_bisection():
    sys = circuit("I1 0 d 100n\nM1 d d 0 0")
    card = nmos_card()
    oracle = bisect(lambda v: mosfet_ids(v, v, 0.0, card) - 100e-9, 0.0, 1.2)
    assert dc_operating_point(sys).x[0] == pytest.approx(oracle, abs=1e-3)


def test_overshoot_guess_converges():
    sys = circuit("V1 vdd 0 DC 1.2\nR1 vdd d 10k\nM1 d d 0 0")
    ref = dc_operating_point(sys)
    guess = np.array([1.2, 10.0, 0.0])
    sol = newton_solve(sys, Solution(guess), IntegratorContext())
    assert np.allclose(sol.x, ref.x, atol=1e-6)
    assert sol.iterations > 1


@pytest.mark.parametrize("name", ["pixel_3t_log", "pixel_2tm", "pixel_4t_linlog", "pixel_3tm"])
def test_builtin_operating_points(name):
    sys = assemble(builtin(name))
    sol = dc_operating_point(sys)
    assert residual_ok(sys, sol)


def test_pixel_3t_log_pd_in_supply_range():
    sys = assemble(builtin("pixel_3t_log"))
    sol = dc_operating_point(sys)
    assert 0.0 < sol.x[sys.index("pd")] < 1.2


def test_nonconvergence_reports_worst_unknown():
    sys = circuit("V1 vdd 0 DC 1.2\nR1 vdd d 10k\nM1 d d 0 0")
    with pytest.raises(NonConvergence) as exc:
        newton_solve(sys, Solution(np.array([1.2, 10.0, 0.0])), IntegratorContext(),
                     SimOptions(max_newton_iters=2))
    assert exc.value.worst in sys.labels


# ---- sweeps


def test_linear_sweep_is_superposition():
    sys = circuit("I1 0 a 1m\nR1 a 0 1k\nV1 b 0 DC 0.5\nR2 b a 1k")
    sw = dc_sweep(sys, "I1", [1e-4, 2e-4, 5e-4])
    expect = 0.5 * (np.array([1e-4, 2e-4, 5e-4]) * 1e3 + 0.5)
    assert np.allclose(sw.node("a"), expect, atol=1e-9)


def test_sweep_rejects_unknown_source():
    sys = assemble(builtin("pixel_3t_log"))
    with pytest.raises(ValueError, match="valid: PD, IBIAS"):
        dc_sweep(sys, "VX", [1e-9])


def test_log_sweep_monotone_and_point_count():
    values = log_points(1e-10, 1e-5, 13)
    assert values.size == 66
    sw = dc_sweep(assemble(builtin("pixel_3t_log")), "PD", values)
    assert sw.converged.all()
    assert np.all(np.diff(sw.node("pd")) <= 0)


def test_warm_sweep_equals_cold():
    sys = assemble(builtin("pixel_4t_linlog"))
    values = log_points(1e-11, 1e-6, 4)
    warm = dc_sweep(sys, "PD", values, warm_start=True)
    for k, v in enumerate(values):
        cold = dc_sweep(sys, "PD", [v])
        assert np.max(np.abs(cold.solutions[0] - warm.solutions[k])) <= 10 * SimOptions().vtol


def test_parallel_dc_sweep_is_bit_identical():
    sys = assemble(builtin("pixel_3t_log"))
    values = log_points(1e-10, 1e-6, 3)
    a = dc_sweep(sys, "PD", values)
    b = dc_sweep(sys, "PD", values, jobs=2)
    assert np.array_equal(a.solutions, b.solutions)


def test_response_sweep_is_bit_identical_in_parallel():
    sys = assemble(builtin("pixel_4t_linlog"))
    values = [1e-9, 1e-7]
    a = response_sweep(sys, "PD", values, 8e-6)
    b = response_sweep(sys, "PD", values, 8e-6, jobs=2)
    assert np.array_equal(a.solutions, b.solutions)
    assert a.node("pd")[0] > a.node("pd")[1]


# ---- transient

RC = "V1 in 0 PULSE(0 1.2 0 1p 1p 1 2)\nR1 in out 1k\nC1 out 0 1n\n"


def test_rc_step_at_tau():
    tau = 1e-6
    tr = transient(circuit(RC), 3 * tau, SimOptions(dt_max=tau / 100))
    assert np.all(np.diff(tr.time) > 0)
    v = np.interp(tau, tr.time, tr.node("out"))
    assert v == pytest.approx(1.2 * (1 - math.exp(-1)), rel=0.005)


def _ramp_error(method, dt):
    tau, a, tstop = 1e-6, 1e5, 2e-6
    sys = circuit(f"V1 in 0 PWL(0 0 {tstop!r} {a * tstop!r})\nR1 in out 1k\nC1 out 0 1n\n")
    tr = transient(sys, tstop, SimOptions(integrator=method), dt=dt)
    t = tr.time
    exact = a * (t - tau * (1 - np.exp(-t / tau)))
    return np.max(np.abs(tr.node("out") - exact))


@pytest.mark.parametrize("method,order", [("be", 1), ("trap", 2)])
def test_convergence_order(method, order):
    errs = [_ramp_error(method, 2e-6 / n) for n in (40, 80, 160)]
    rates = [math.log2(e0 / e1) for e0, e1 in zip(errs, errs[1:])]
    for r in rates:
        assert abs(r - order) <= 0.3


def test_charge_conservation():
    # 1 nA for 5 us charges C1; afterwards the pair only shares charge
    text = ("I1 0 a PWL(0 0 1n 1n 5u 1n 5.001u 0)\nC1 a 0 2p\nR1 a b 100k\nC2 b 0 1p\n"
            "R9 a 0 1e18\n")
    tr = transient(circuit(text), 20e-6)
    q = 2e-12 * tr.node("a") + 1e-12 * tr.node("b")
    after = tr.time >= 5.001e-6
    q0 = q[after][0]
    assert q0 == pytest.approx(5e-15, rel=0.01)
    assert np.max(np.abs(q[after] - q0)) <= SimOptions().reltol * q0
    assert tr.node("a")[-1] == pytest.approx(tr.node("b")[-1], rel=1e-3)


def test_backward_euler_option_runs():
    tr = transient(circuit(RC), 3e-6, SimOptions(integrator="be", dt_max=1e-8))
    v = np.interp(1e-6, tr.time, tr.node("out"))
    assert v == pytest.approx(1.2 * (1 - math.exp(-1)), rel=0.01)


def test_steps_land_on_breakpoints():
    tr = transient(circuit(RC.replace("PULSE(0 1.2 0 1p 1p 1 2)",
                                      "PULSE(0 1.2 1u 10n 10n 2u 5u)")), 4e-6)
    for bp in (1e-6, 1.01e-6, 3.01e-6, 3.02e-6):
        assert np.min(np.abs(tr.time - bp)) <= 1e-18


def test_3t_log_reset_cycle_shape():
    sys = assemble(builtin("pixel_3t_log"))
    tr = transient(sys, 40e-6)
    out = tr.node("out")
    during = tr.window(1.5e-6, 6e-6)
    after = tr.window(7e-6, 20e-6)
    assert out[during].min() > out[after].max()
    assert out[tr.window(7e-6, 20e-6)][-1] < out[tr.window(7e-6, 20e-6)][0]


# ---- memristor

FAST = "RON=100 ROFF=16k D=10n MU=1e-14 X0=0.5"


def _mem_run(freq, window="joglekar", v0=1.0, cycles=1):
    text = f"V1 a 0 {sine_pwl(v0, freq, cycles)}\nYMEM m a 0 {FAST} WINDOW={window}\n"
    sys = circuit(text)
    tr = transient(sys, cycles / freq)
    return sys, tr


def test_pinched_hysteresis_loop():
    areas = []
    for f in (1.0, 10.0):
        _, tr = _mem_run(f)
        v = tr.node("a")
        i = tr.source_currents["V1"]
        small = np.abs(v) <= 1e-9
        assert small.sum() >= 3
        assert np.all(np.abs(i[small]) <= 1e-12)
        areas.append(abs(np.trapezoid(i, v)))
    assert areas[1] < areas[0]


def test_state_matches_quadrature_without_window():
    sys, tr = _mem_run(1.0, window="none", v0=0.25)
    i = tr.source_currents["V1"]
    card = sys.circuit.device("m").card
    x = 0.5 + card.drift_rate * np.concatenate(
        [[0.0], np.cumsum(0.5 * (i[1:] + i[:-1]) * np.diff(tr.time))])
    assert np.max(np.abs(x - tr.state("m"))) <= 1e-4


def test_state_matches_ode_quadrature_with_window():
    sys, tr = _mem_run(1.0, v0=0.25)
    card = sys.circuit.device("m").card
    t, i = tr.time, tr.source_currents["V1"]

    def rhs(tt, x):
        return [memristor_dxdt(min(max(x[0], 0.0), 1.0), np.interp(tt, t, i), card)]

    ref = solve_ivp(rhs, (0, t[-1]), [card.x0], t_eval=t, rtol=1e-10, atol=1e-12,
                    max_step=float(np.min(np.diff(t))) * 4)
    assert np.max(np.abs(ref.y[0] - tr.state("m"))) <= 1e-4
    assert np.ptp(tr.state("m")) > 0.05


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=8),
       st.sampled_from(["joglekar", "biolek", "none"]), st.floats(0, 1))
def test_state_stays_in_unit_interval(levels, window, x0):
    pts = " ".join(f"{k * 0.1!r} {v!r}" for k, v in enumerate(levels))
    text = f"V1 a 0 PWL({pts})\nR1 a b 100\nYMEM m b 0 RON=100 ROFF=16k X0={x0!r} WINDOW={window}"
    tr = transient(circuit(text), (len(levels) - 1) * 0.1 + 0.1)
    s = tr.state("m")
    assert np.all((s >= 0.0) & (s <= 1.0))
