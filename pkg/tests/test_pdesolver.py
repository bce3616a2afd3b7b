import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from novikov_lab.pdesolver import (
    CFLWarning,
    Grid,
    Operators,
    SCHEMES,
    h1_functional,
    m_form_identity,
    residual_scan,
    simulate,
    stability_bound,
)


def wave(x):
    return 2 + np.sin(x)


def test_momentum_form_expands_to_nonlinear_terms():
    assert m_form_identity().is_zero()


def test_grid_validation():
    assert Grid(16).dx == pytest.approx(2 * math.pi / 16)
    for bad in (8, 24, 100):
        with pytest.raises(ValueError):
            Grid(bad)
    with pytest.raises(ValueError):
        Grid(32, length=0)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_h1_examples(scheme):
    g = Grid(64)
    assert h1_functional(np.zeros(64), g, scheme) == 0
    assert h1_functional(np.full(64, 1.5), g, scheme) == pytest.approx(1.5**2 * g.length, rel=1e-14)
    tol = 1e-13 if scheme == "spectral" else 1e-4
    assert h1_functional(np.sin(g.nodes), g, scheme) == pytest.approx(2 * math.pi, rel=tol)


@pytest.mark.parametrize("scheme", SCHEMES)
@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_helmholtz_round_trip(scheme, cs):
    g = Grid(64)
    x = g.nodes
    u = cs[0] + sum(c * np.cos((k + 1) * x) + c / 2 * np.sin((k + 2) * x) for k, c in enumerate(cs[1:]))
    ops = Operators(g, scheme)
    back = ops.solve_helmholtz(ops.helmholtz(u))
    assert np.max(np.abs(back - u)) <= 1e-12 * max(1.0, np.max(np.abs(u)))


def test_spectral_derivatives_exact_on_trig():
    g = Grid(32)
    ops = Operators(g, "spectral")
    x = g.nodes
    assert np.max(np.abs(ops.dx(np.sin(3 * x)) - 3 * np.cos(3 * x))) < 1e-12
    assert np.max(np.abs(ops.dxx(np.sin(3 * x)) + 9 * np.sin(3 * x))) < 1e-11


@pytest.mark.parametrize("scheme", SCHEMES)
def test_constant_data_stays_constant(scheme):
    tr = simulate(1.0, Grid(32), 0.5, 1e-2, scheme)
    assert np.all(tr.final.u == 1.0)
    assert tr.h1_max_drift_rel == 0.0


def test_spectral_self_convergence_while_smooth():
    finals = {n: np.fft.rfft(simulate(wave, Grid(n), 0.1, 1e-3).final.u)[:8] / n for n in (16, 32, 64, 256)}
    errs = [np.max(np.abs(finals[n] - finals[256])) for n in (16, 32, 64)]
    # faster than any fixed algebraic order
    assert errs[0] / errs[1] > 1e3 and errs[1] / errs[2] > 1e5


def test_time_reversal_recovers_initial_data():
    g = Grid(64)
    errs = []
    for dt in (2e-3, 1e-3):
        fwd = simulate(wave, g, 0.1, dt)
        back = simulate(fwd.final.u, g, 0.1, dt, reverse=True)
        errs.append(np.max(np.abs(back.final.u - wave(g.nodes))))
    assert errs[1] < 1e-8
    assert errs[0] / errs[1] > 2**3.5


def test_h1_drift_shrinks_with_step():
    g = Grid(64)
    drifts = [simulate(wave, g, 0.5, dt).h1_max_drift_rel for dt in (2e-3, 1e-3)]
    assert drifts[1] < drifts[0] and drifts[1] < 1e-6


def test_cfl_warning_and_validation():
    with pytest.warns(CFLWarning):
        simulate(wave, Grid(64), 0.1, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        simulate(wave, Grid(64), 0.01, 1e-3)
    assert stability_bound(np.zeros(16), Grid(16)) == math.inf
    with pytest.raises(ValueError):
        simulate(wave, Grid(64), 0.1, 3e-2 / 7)
    with pytest.raises(ValueError):
        simulate(wave, Grid(64), 0.1, 1e-3, scheme="chebyshev")


def test_blowup_is_reported():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = simulate(lambda x: 40 + 30 * np.sin(x), Grid(64), 1.0, 1e-2, check_consistency=False)
    assert tr.blowup_time is not None and "blowup_time" in tr.summary()


def test_trajectory_outputs(tmp_path):
    tr = simulate(wave, Grid(16), 0.02, 1e-2, output_every=1)
    tr.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,x,u,m" and len(lines) == 1 + 3 * 16
    assert set(tr.summary()) == {"n", "dt", "t_end", "scheme", "h1_initial", "h1_final", "h1_max_drift_rel"}


def test_simulation_is_bitwise_deterministic():
    a, b = simulate(wave, Grid(64), 0.1, 1e-3), simulate(wave, Grid(64), 0.1, 1e-3)
    assert np.array_equal(a.final.u, b.final.u) and a.history == b.history


def test_mean_m_is_reported():
    tr = simulate(wave, Grid(64), 0.1, 1e-3)
    assert len(tr.mean_m) == len(tr.history)
    assert tr.mean_m[0][1] == pytest.approx(4 * math.pi)


def test_residual_scan_examples():
    # exponential profiles are not periodic; sample them pointwise on [0, 1]
    g = np.linspace(0.0, 1.0, 11)
    times = [1.0, 1.5, 2.0]
    assert residual_scan(lambda t, x: math.exp(x - 3 * t), g, times) <= 1e-6
    assert residual_scan(lambda t, x: math.exp(x) / math.sqrt(t), g, times) <= 1e-6
    assert residual_scan(lambda t, x: (1 + 0.3 * math.sin(2 * t)) * math.exp(-x), g, times) <= 1e-6
    assert residual_scan(lambda t, x: math.sin(x), g, times) > 1e-2
    assert residual_scan(lambda t, x: 2.5, Grid(16), times) < 1e-6
