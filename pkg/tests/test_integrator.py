import math

import numpy as np
import pytest

from ch6 import BlowUpError, ConfigurationError, GridSpec, RealField
from ch6.diagnostics import RecordRequest
from ch6.integrator import (
    PicardConfig,
    StepperConfig,
    default_dt,
    evolve,
    linear_propagator,
    picard_local_solve,
    record_times,
    step,
)
from ch6.model import PhysicalParams, PotentialSpec
from ch6.spectral import band_limited_random


def sine(grid, eps):
    x = grid.coordinates()[0]
    return RealField(grid, eps * np.sin(x) + np.zeros(grid.shape))


@pytest.mark.parametrize(
    "k,delta,kappa0,dt,expected",
    [(1.0, 1.0, 1.0, 0.1, math.exp(-0.2)), (0.0, 1.0, 1.0, 5.0, 1.0), (math.sqrt(2), 0.5, 1.0, 0.01, math.exp(-0.08))],
)
def test_linear_propagator(k, delta, kappa0, dt, expected):
    p = PhysicalParams(delta=delta, g0=kappa0)
    assert linear_propagator(k, p, dt) == pytest.approx(expected, rel=1e-15)


def test_linear_propagator_values():
    assert linear_propagator(1.0, PhysicalParams(), 0.1) == pytest.approx(0.818731, abs=1e-6)
    assert linear_propagator(math.sqrt(2), PhysicalParams(delta=0.5), 0.01) == pytest.approx(0.923116, abs=1e-6)


@pytest.mark.parametrize("scheme", ["ifeuler", "ifrk4"])
def test_linear_step_is_exact(scheme):
    g = GridSpec(3, 8)
    p = PhysicalParams(delta=1.0, g0=2.0)
    cfg = StepperConfig(scheme=scheme, dt=0.05, linear_only=True)
    u = step(sine(g, 1e-3), cfg, p)
    expected = sine(g, 1e-3 * math.exp(-3.0 * 0.05))
    assert np.max(np.abs(u.values - expected.values)) < 1e-18


@pytest.mark.parametrize("scheme", ["ifeuler", "ifrk4"])
@pytest.mark.parametrize("form", ["kappa", "mu"])
def test_constant_is_steady(scheme, form):
    g = GridSpec(3, 8)
    u = RealField(g, np.full(g.shape, 0.3))
    v = step(u, StepperConfig(scheme=scheme, dt=0.1, form=form), PhysicalParams())
    assert np.max(np.abs(v.values - 0.3)) < 1e-15


def test_forms_agree():
    g = GridSpec(3, 16, 16 * np.pi)
    u = band_limited_random(g, k_max=3, slope=-1, seed=7)
    u = RealField(g, 0.3 * u.values / np.abs(u.values).max())
    p = PhysicalParams()
    a = evolve(u, StepperConfig(dt=0.05, form="kappa"), p, 1.0, 1.0).final
    b = evolve(u, StepperConfig(dt=0.05, form="mu"), p, 1.0, 1.0).final
    assert np.max(np.abs(a.values - b.values)) < 1e-8 * np.abs(a.values).max()


def test_mu_form_runs_other_potentials_and_mobility():
    g = GridSpec(2, 16, 8 * np.pi)
    u = band_limited_random(g, k_max=2, seed=1)
    u = RealField(g, 0.1 * u.values / np.abs(u.values).max())
    params = PhysicalParams(M=0.5, potential=PotentialSpec("pawlow_quartic", alpha=0.5))
    traj = evolve(u, StepperConfig(dt=0.01), params, 1.0, 0.5)
    assert abs(traj.final.mean() - u.mean()) < 1e-15
    assert np.all(np.isfinite(traj.final.values))


def test_zero_data_stays_zero():
    g = GridSpec(3, 8)
    traj = evolve(RealField(g, np.zeros(g.shape)), StepperConfig(dt=0.1), PhysicalParams(), 1.0, 0.5)
    assert np.all(traj.final.values == 0)
    assert all(r.l2 == 0 for r in traj.records)


def test_record_times():
    assert record_times(1.0, 5.0) == [0.0, 1.0]
    assert record_times(1.0, 0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert record_times(1.0, 0.3)[-1] == 1.0 and len(record_times(1.0, 0.3)) == 5
    with pytest.raises(ConfigurationError):
        record_times(0.0, 1.0)


def test_records_land_on_cadence():
    g = GridSpec(3, 8)
    traj = evolve(sine(g, 1e-3), StepperConfig(dt=0.3), PhysicalParams(), 2.0, 0.5, snapshot_every=2)
    assert [r.t for r in traj.records] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert [t for t, _ in traj.snapshots] == [0.0, 1.0, 2.0]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_is_reported():
    g = GridSpec(3, 8)
    u = band_limited_random(g, k_max=2, seed=0)
    u = RealField(g, 5.0 * u.values / np.abs(u.values).max())
    with pytest.raises(BlowUpError) as info:
        evolve(u, StepperConfig(dt=1.0, dealias="off"), PhysicalParams(), 50.0, 1.0)
    assert info.value.t > 0
    assert len(info.value.trajectory.records) >= 1


def test_default_dt():
    g = GridSpec(3, 64, 32 * np.pi)
    assert default_dt(g, PhysicalParams(), 1e-2, dt_max=2.0) == 2.0
    assert default_dt(g, PhysicalParams(g0=-1.0), 1e-2) < 0.1


def test_bad_stepper_config():
    with pytest.raises(ConfigurationError):
        StepperConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        StepperConfig(scheme="rk2")
    with pytest.raises(ConfigurationError):
        PicardConfig(T1=2.0)


def gaussian_small(grid, width, target):
    from ch6 import NormSpec
    from ch6.spectral import norm

    L = grid.box_length
    r2 = sum(((x - L / 2)) ** 2 for x in grid.coordinates())
    v = np.exp(-r2 / (2 * width**2))
    v = v - v.mean()
    u = RealField(grid, v)
    return RealField(grid, v * target / norm(u, NormSpec.sobolev(2, homogeneous=False)))


def test_picard_zero_data():
    g = GridSpec(3, 8)
    res = picard_local_solve(RealField(g, np.zeros(g.shape)), PicardConfig(j_max=3, n_inner=16), PhysicalParams())
    assert res.ratios == []
    assert all(np.all(f.values == 0) for f in res.finals)


@pytest.mark.parametrize("g0", [1.0, -0.5])
def test_picard_first_iterate_oracle(g0):
    g = GridSpec(3, 16, 8 * np.pi)
    p = PhysicalParams(g0=g0)
    u0 = gaussian_small(g, 1.5, 1e-2)
    # with A^0 = 0 the frozen coefficients are constant (diffusion -kappa1 kappa2^2,
    # reaction h0 (w + 1)), so the explicit part is linear and needs no truncation
    cfg = PicardConfig(T1=0.1, j_max=1, n_inner=64, stepper=StepperConfig(dealias="off"))
    first = picard_local_solve(u0, cfg, p).finals[0]
    k0, k1, k2 = p.kappa
    ksq = g.ksq_half
    sym = -p.delta * ksq**3 - k0 * ksq**2 + k1 * k2**2 * ksq**2 - p.h0 * ksq
    exact = g.irfft(np.exp(sym * cfg.T1) * g.rfft(u0.values))
    assert np.max(np.abs(first.values - exact)) <= 1e-8 * np.max(np.abs(exact))


def test_picard_contracts_on_small_data():
    g = GridSpec(3, 16, 8 * np.pi)
    u0 = gaussian_small(g, 1.5, 1e-2)
    res = picard_local_solve(u0, PicardConfig(T1=0.1, j_max=4, n_inner=64), PhysicalParams())
    assert res.contracting and res.lambda_max < 0.1
    assert all(b < a for a, b in zip(res.sup_diffs, res.sup_diffs[1:]))


def test_picard_reports_divergence():
    g = GridSpec(3, 8, 2 * np.pi)
    u = band_limited_random(g, k_max=2, seed=0)
    u = RealField(g, 3.0 * u.values / np.abs(u.values).max())
    res = picard_local_solve(u, PicardConfig(T1=1.0, j_max=4, n_inner=16), PhysicalParams(g0=-3.0))
    assert not res.contracting


def test_rk4_is_fourth_order_quick():
    g = GridSpec(3, 16, 16 * np.pi)
    u = band_limited_random(g, k_max=3, slope=-1, seed=7)
    u = RealField(g, 0.5 * u.values / np.abs(u.values).max())
    p = PhysicalParams()
    finals = [evolve(u, StepperConfig(dt=4.0 / n), p, 4.0, 4.0, RecordRequest(n_grad=0)).final for n in (16, 32, 64)]
    e1 = np.abs(finals[0].values - finals[1].values).max()
    e2 = np.abs(finals[1].values - finals[2].values).max()
    assert math.log2(e1 / e2) == pytest.approx(4.0, abs=0.3)
