import math

import numpy as np
import pytest

from conftest import circuit
from pixsim.analysis import (
    AreaConfig, EmptyWindow, InsufficientPoints, MissingGeometry, NoKnee, NoSensitiveRegion,
    PixelReport, area_report, average_power, compare_pixels, detect_knee, dynamic_range_db,
    fit_log_slope, mask_for, output_swing, post_reset_windows, reset_high_windows,
)
from pixsim.config import area_config, load_config
from pixsim.devices import Pulse
from pixsim.engine import SimOptions, assemble, SweepResult, TransientResult, log_points, transient
from pixsim.netlist import builtin, parse
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def sweep(i, v):
    i = np.asarray(i, float)
    return SweepResult("PD", i, ["out"], np.asarray(v, float).reshape(-1, 1),
                       np.ones(i.size, bool))


def trace(t, v):
    t = np.asarray(t, float)
    return TransientResult(t, ["out"], np.asarray(v, float).reshape(-1, 1), {}, {}, {})


# ---- swing


def test_swing_constant_and_sine():
    t = np.linspace(0, 1e-5, 1001)
    assert output_swing(trace(t, np.full(t.size, 0.7)), "out") == 0.0
    v = 0.4 + 0.2 * np.sin(2 * np.pi * 1e5 * t)
    assert output_swing(trace(t, v), "out") == pytest.approx(0.4, rel=1e-6)
    with pytest.raises(EmptyWindow):
        output_swing(trace(t, v), "out", (2e-5, 3e-5))


def test_reset_windows():
    p = Pulse(0, 1.2, 1e-6, 10e-9, 10e-9, 5e-6, 20e-6)
    post = post_reset_windows(p, 41e-6, settle=0.5e-6)
    assert post[0] == (0.0, 1e-6)
    assert post[1] == pytest.approx((6.52e-6, 21e-6))
    high = reset_high_windows(p, 41e-6, settle=0.5e-6)
    assert high[0] == pytest.approx((1.51e-6, 6.01e-6))
    assert len(high) == 2
    t = np.linspace(0, 41e-6, 4101)
    m = mask_for(trace(t, t), high)
    assert m.any() and not m[0]


# ---- fits


def test_fit_exact_line():
    i = log_points(1e-9, 1e-6, 10)
    v = 1 - 0.077 * np.log10(i / 1e-9)
    fit = fit_log_slope(sweep(i, v), "out", (1e-9, 1e-6))
    assert fit.log_slope == pytest.approx(-77.0, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-9)


def test_fit_needs_points():
    with pytest.raises(InsufficientPoints):
        fit_log_slope(sweep([1e-9, 1e-8, 1e-7], [1, 0.9, 0.8]), "out", (1e-9, 1e-7))


def two_segment(i, knee, v0=1.0, slope_log=0.08):
    """Linear in I below the knee, logarithmic above, continuous at the knee."""
    k_lin = slope_log / (knee * math.log(10))       # matches slopes at the knee
    return np.where(i <= knee, v0 - k_lin * (i - i[0]),
                    v0 - k_lin * (knee - i[0]) - slope_log * np.log10(i / knee))


def test_knee_planted():
    i = log_points(1e-12, 1e-4, 8)
    kr = detect_knee(sweep(i, two_segment(i, 1e-8)), "out")
    assert 0.5e-8 <= kr.knee_current <= 2e-8
    assert kr.linear_r2 > 0.99 and kr.log_r2 > 0.99


def test_knee_random_plants():
    rng = np.random.default_rng(1)
    i = log_points(1e-13, 1e-3, 8)
    for _ in range(50):
        knee = 10 ** rng.uniform(-10, -6)
        kr = detect_knee(sweep(i, two_segment(i, knee)), "out")
        assert knee / 2 <= kr.knee_current <= knee * 2


def test_pure_log_has_no_knee():
    i = log_points(1e-10, 1e-5, 10)
    with pytest.raises(NoKnee):
        detect_knee(sweep(i, 1 - 0.07 * np.log10(i)), "out")


def test_knee_needs_decades():
    i = log_points(1e-9, 1e-7, 10)
    with pytest.raises(InsufficientPoints):
        detect_knee(sweep(i, two_segment(i, 1e-8)), "out")


def test_dynamic_range():
    i = log_points(1e-10, 1e-5, 10)
    assert dynamic_range_db(sweep(i, 1 - 0.06 * np.log10(i)), "out") == pytest.approx(100.0)
    with pytest.raises(NoSensitiveRegion):
        dynamic_range_db(sweep(i, np.ones(i.size)), "out")


def test_dynamic_range_spacing_invariant():
    rng = np.random.default_rng(4)
    base = log_points(1e-12, 1e-4, 10)

    def resp(i):
        return np.where(i < 1e-10, 1.0, 1.0 - 0.06 * np.log10(i / 1e-10))

    for _ in range(10):
        inner = np.sort(10 ** rng.uniform(-12, -4, 78))
        i = np.concatenate([[1e-12], inner, [1e-4]])
        step = 20 * np.max(np.diff(np.log10(i)))
        a = dynamic_range_db(sweep(base, resp(base)), "out")
        b = dynamic_range_db(sweep(i, resp(i)), "out")
        assert abs(a - b) <= max(step, 20 * 0.1) + 1e-9


# ---- power


def test_power_ohms_law():
    tr = transient(assemble(parse("V1 a 0 DC 1.2\nR1 a 0 1.2k"), gmin=0.0), 1e-6)
    assert average_power(tr) == pytest.approx(1.2e-3, rel=1e-12)


def test_power_source_free_decay():
    tr = transient(circuit("R1 a 0 1k\nC1 a 0 1n\nI1 0 a 0"), 5e-6)
    assert average_power(tr) == 0.0


def test_power_refinement_invariant():
    text = "V1 a 0 PULSE(0 1 1u 10n 10n 2u 5u)\nR1 a b 1k\nC1 b 0 1n\n"
    coarse = transient(circuit(text), 10e-6, SimOptions(dt_max=2e-8))
    fine = transient(circuit(text), 10e-6, SimOptions(dt_max=1e-8, lte_tol=1e-5))
    assert average_power(fine) == pytest.approx(average_power(coarse), rel=1e-3)


# ---- area


def test_area_single_devices():
    r = area_report(parse("M1 d g 0 0"), AreaConfig())
    assert r.total_um2 == pytest.approx(0.81)
    m = area_report(parse("YMEM m a 0"), AreaConfig())
    assert m.total_um2 == pytest.approx(3.6e-3)


def test_area_total_is_sum_of_rows():
    for name in ("pixel_3tm", "pixel_4t_linlog", "pixel_2tm"):
        r = area_report(builtin(name), AreaConfig())
        total = 0.0
        for row in r.rows:
            total += row[2]
        assert r.total_um2 == total


def test_shipped_calibration():
    cfg = load_config(ROOT / "table1.toml")
    a3 = area_report(builtin("pixel_3tm"), area_config(cfg, "pixel_3tm")).total_um2
    a4 = area_report(builtin("pixel_4t_linlog"), area_config(cfg, "pixel_4t_linlog")).total_um2
    assert f"{a3:.2f}" == "26.83" and f"{a4:.2f}" == "100.00"
    assert a3 / a4 == pytest.approx(0.2683, abs=1e-4)


def test_missing_rule_names_kind():
    cfg = AreaConfig(photodiode_area_um2=None)
    with pytest.raises(MissingGeometry) as exc:
        area_report(builtin("pixel_3tm"), cfg)
    assert exc.value.kind == "photodiode"


# ---- comparison


def test_identical_reports():
    r = PixelReport("a", swing=0.3, dynamic_range_db=90, avg_power=1e-5, total_area=10)
    comp = compare_pixels([r, PixelReport("b", 0.3, 90, 1e-5, 10)])
    for _, ar, pr, sr, dd in comp.rows():
        assert (ar, pr, sr, dd) == (1.0, 1.0, 1.0, 0.0)


def test_area_ratio():
    comp = compare_pixels([PixelReport("3tm", total_area=26.83),
                           PixelReport("4t", total_area=100.0)])
    assert comp.area_ratio[0] == pytest.approx(0.2683)
    assert comp.power_ratio[0] is None
    with pytest.raises(ValueError):
        compare_pixels([PixelReport("x")])
    with pytest.raises(ValueError):
        PixelReport("bad", swing=-1)
