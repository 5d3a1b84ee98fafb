import numpy as np
import pytest

from toaops import evolution
from toaops.errors import DomainError, NumericInstabilityError
from toaops.evolution import (DynamicsReport, PropagatorConfig, SplitStepper, arrival_metrics, embed,
                              gaussian_packet, propagate)
from toaops.kernels import KernelEvaluator
from toaops.operator import EigenMode, build_matrix, classified_spectrum, select_mode
from toaops.potentials import catalog_lookup
from toaops.specialfn import gauss_legendre

COS = catalog_lookup("cosine", {"V0": 1.0, "k": 1.0})


@pytest.fixture(scope="module")
def cos_modes():
    return classified_spectrum(build_matrix(KernelEvaluator("supra", COS), 1.0, 120), COS)


def test_embed_is_exact_for_polynomials():
    grid = gauss_legendre(30, -1.0, 1.0)
    poly = lambda x: 1 + x - 2 * x ** 3 + 0.5 * x ** 7
    mode = EigenMode(tau=1.0, amplitudes=poly(grid.nodes).astype(complex), grid=grid, index=0)
    cfg = PropagatorConfig(L=2.0, N=512)
    psi = embed(mode, cfg)
    x = cfg.grid
    ref = np.where(np.abs(x) <= 1.0, poly(x), 0.0)
    ref = ref / np.sqrt(np.sum(ref ** 2) * cfg.dx)
    assert np.max(np.abs(psi.amplitudes - ref)) <= 1e-10


def test_embed_preserves_parity_and_norm(cos_modes):
    odd = next(m for m in cos_modes if m.parity == "odd")
    cfg = PropagatorConfig(L=2.0, N=1024)
    psi = embed(odd, cfg)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    a = psi.amplitudes[1:]  # x_j and x_{N-j} mirror each other
    assert np.max(np.abs(a + a[::-1])) <= 1e-10


def test_embed_rejects_small_box(cos_modes):
    with pytest.raises(DomainError):
        embed(cos_modes[0], PropagatorConfig(L=0.5, N=256))


def test_free_gaussian_spreading_law():
    cfg = PropagatorConfig(L=12.0, N=1024, dt=1e-3, t_max=1.0)
    rep = propagate(gaussian_packet(cfg, 0.5), None, cfg)
    exact = 0.25 * (1 + (rep.times / (2 * 0.25)) ** 2)
    assert np.max(np.abs(rep.var_q / exact - 1)) <= 1e-6
    assert np.max(np.abs(rep.norm - 1)) <= 1e-10


def test_free_gaussian_with_mass_and_hbar():
    cfg = PropagatorConfig(L=12.0, N=1024, dt=1e-3, t_max=0.5, mu=2.0, hbar=0.5)
    rep = propagate(gaussian_packet(cfg, 0.4, p0=0.3), None, cfg)
    exact = 0.16 * (1 + (0.5 * rep.times / (2 * 2.0 * 0.16)) ** 2)
    assert np.max(np.abs(rep.var_q / exact - 1)) <= 1e-6
    assert rep.mean_q[-1] == pytest.approx(0.3 * 0.5 / 2.0, rel=1e-8)


def test_second_order_in_time_step():
    osc = catalog_lookup("quadratic", {"V0": 1.0})
    var = []
    for dt in (4e-3, 2e-3, 1e-3):
        cfg = PropagatorConfig(L=12.0, N=1024, dt=dt, t_max=1.0)
        var.append(propagate(gaussian_packet(cfg, 0.5, q0=1.0), osc, cfg).var_q[:: int(round(4e-3 / dt))])
    ratio = np.max(np.abs(var[0] - var[1])) / np.max(np.abs(var[1] - var[2]))
    assert 3.5 <= ratio <= 4.5


def test_norm_conserved_over_many_steps():
    cfg = PropagatorConfig(L=4.0, N=512, dt=1e-4, t_max=1.0)
    psi = gaussian_packet(cfg, 0.3, q0=0.4, p0=2.0).amplitudes
    out = SplitStepper(COS, cfg).run(psi, 10_000)
    assert abs(np.sum(np.abs(out) ** 2) * cfg.dx - 1.0) <= 1e-10


def test_time_reversal():
    cfg = PropagatorConfig(L=4.0, N=512, dt=1e-3, t_max=1.0)
    psi0 = gaussian_packet(cfg, 0.3, q0=0.2, p0=1.0).amplitudes
    fwd = SplitStepper(COS, cfg).run(psi0, 400)
    back = SplitStepper(COS, cfg, dt=-cfg.dt).run(fwd, 400)
    assert np.sqrt(np.sum(np.abs(back - psi0) ** 2) * cfg.dx) <= 1e-8


def test_parity_and_nodal_invariants(cos_modes):
    odd = select_mode(cos_modes, 0.01, parity="odd")
    even = select_mode(cos_modes, 0.01, parity="even")
    cfg = PropagatorConfig.for_mode(1.0, odd.tau)
    for mode, sign in ((odd, -1), (even, 1)):
        rep = propagate(embed(mode, cfg), COS, cfg)
        psi = rep.final.amplitudes[1:]
        assert np.max(np.abs(psi - sign * psi[::-1])) <= 1e-8 * np.max(np.abs(psi))
        if sign < 0:
            assert np.sqrt(rep.origin_ratio()) <= 1e-8


def test_unitary_arrival_of_nonnodal_mode(cos_modes):
    m = select_mode(cos_modes, 0.01, nodal="nonnodal")
    cfg = PropagatorConfig.for_mode(1.0, m.tau)
    assert cfg.dt <= 2e-5 + 1e-12
    rep = propagate(embed(m, cfg), COS, cfg)
    met = arrival_metrics(rep)
    assert abs(met.t_max_prob - m.tau) <= max(5 * cfg.dt, 0.15 * m.tau)
    assert met.interior_min_var
    assert rep.snapshots.shape == (len(rep.snapshot_times), len(rep.snapshot_grid))


def test_arrival_metrics_monotone_and_parabolic():
    t = np.linspace(0, 1, 11)
    rep = DynamicsReport(times=t, mean_q=0 * t, var_q=1 + t, prob_eps=np.exp(-((t - 0.43) ** 2)),
                         norm=1 + 0 * t, origin_density=t, max_density=1 + t, epsilon=0.1)
    met = arrival_metrics(rep)
    assert met.t_min_var == 0.0 and not met.interior_min_var
    assert met.interior_max_prob
    # parabola through three samples of a Gaussian peak lands close to the true peak
    assert met.t_max_prob == pytest.approx(0.43, abs=2e-3)
    assert met.sharpness > 1.0
    with pytest.raises(DomainError):
        arrival_metrics(DynamicsReport(*(np.empty(0),) * 7, epsilon=0.1))


def test_norm_drift_raises(monkeypatch):
    cfg = PropagatorConfig(L=4.0, N=256, dt=1e-3, t_max=0.01)
    original = SplitStepper.step
    monkeypatch.setattr(evolution.SplitStepper, "step", lambda self, psi: 1.001 * original(self, psi))
    with pytest.raises(NumericInstabilityError):
        propagate(gaussian_packet(cfg, 0.3), COS, cfg)


def test_absorbing_mask_removes_outgoing_flux():
    cfg = PropagatorConfig(L=4.0, N=512, dt=1e-3, t_max=2.0, boundary="absorbing_mask", mask_width=1.0)
    rep = propagate(gaussian_packet(cfg, 0.3, p0=6.0), None, cfg)
    assert rep.norm[-1] < 0.5
    assert np.all(np.diff(rep.norm) <= 1e-12)


@pytest.mark.parametrize("kwargs", [dict(L=-1.0), dict(L=1.0, N=300), dict(L=1.0, N=128), dict(L=1.0, dt=0.0),
                                    dict(L=1.0, t_max=0.0), dict(L=1.0, boundary="open"),
                                    dict(L=1.0, boundary="absorbing_mask", mask_width=2.0),
                                    dict(L=1.0, epsilon=0.0)])
def test_config_validation(kwargs):
    with pytest.raises(DomainError):
        PropagatorConfig(**kwargs)


def test_default_config_for_mode():
    cfg = PropagatorConfig.for_mode(3.0, 0.1)
    assert (cfg.L, cfg.N, cfg.t_max, cfg.epsilon) == (6.0, 2048, pytest.approx(0.3), 0.15)
    assert cfg.dt == pytest.approx(2e-4)
    assert PropagatorConfig.for_mode(1.0, 1e-3).dt == 1e-5
