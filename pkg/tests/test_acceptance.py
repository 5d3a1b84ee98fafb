"""Acceptance criteria, one test per criterion, at the stated tolerances.

Each test records a one-line verdict; ``conftest.py`` prints them at the end
of the session, and running this file directly prints them as well.
"""

import time

import numpy as np
import pytest

from toaops.cli import load_config, run_compare
from toaops.evolution import PropagatorConfig, arrival_metrics, embed, gaussian_packet, propagate
from toaops.kernels import (KernelEvaluator, SeriesConfig, correction_tn, series_tkf, supra_tkf, tke_residual,
                            weyl_tkf)
from toaops.operator import build_matrix, classified_spectrum, parity_partner_check, select_mode, spectrum
from toaops.potentials import (CATALOG_NAMES, catalog_lookup, catalog_params, separability_residual,
                               theorem1_check, theorem2_test)

RESULTS = {}
COS = catalog_lookup("cosine", {"V0": 1.0, "k": 1.0})


def record(number, passed, detail, start, limit):
    elapsed = time.perf_counter() - start
    ok = bool(passed) and elapsed < limit
    RESULTS[number] = (ok, f"{detail}; runtime {elapsed:.1f}s (limit {limit:.0f}s)")
    return ok


def test_criterion_01_boundary_conditions():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    u = rng.uniform(-5, 5, 100)
    v = rng.uniform(-5, 5, 100)
    err_u = np.max(np.abs(supra_tkf(COS, u, np.zeros_like(u)) - u / 4))
    err_v = np.max(np.abs(supra_tkf(COS, np.zeros_like(v), v)))
    passed = err_u <= 1e-14 and err_v <= 1e-14
    assert record(1, passed, f"max|T(u,0)-u/4|={err_u:.1e}, max|T(0,v)|={err_v:.1e}", start, 1.0)


def test_criterion_02_oracle_triangle():
    start = time.perf_counter()
    rng = np.random.default_rng(102)
    pts = rng.uniform(-1.5, 1.5, size=(20, 2))
    S = SeriesConfig.for_potential(COS, 30, 30)
    worst_series, bounded, improved = 0.0, True, True
    for u, v in pts:
        val, tail = series_tkf(S, u, v, return_error=True)
        sup = supra_tkf(COS, u, v)
        wey = weyl_tkf(COS, u, v)
        t1 = correction_tn(COS, 1, u, v)
        diff = abs(val - sup)
        worst_series = max(worst_series, diff)
        bounded = bounded and diff <= tail and diff <= 1e-7
        if not abs(sup - (wey + t1)) < abs(sup - wey):
            improved = False
    passed = improved and bounded
    assert record(2, passed, f"max|series-supra|={worst_series:.1e}, within tail estimate={bounded}, "
                             f"T1 improves Weyl at all points={improved}",
                  start, 120.0)


def test_criterion_03_tke_residual():
    start = time.perf_counter()

    def sup(u, v):
        return supra_tkf(COS, u, v)

    def wey(u, v):
        return weyl_tkf(COS, u, v)

    r02, r01 = (tke_residual(sup, COS, 1.0, 1.0, h) for h in (0.02, 0.01))
    ratio = r02 / r01
    rs = tke_residual(sup, COS, 1.0, 1.0, 0.005)
    rw = tke_residual(wey, COS, 1.0, 1.0, 0.005)
    passed = 3.5 <= ratio <= 4.5 and rw > 10 * rs
    assert record(3, passed, f"supra ratio={ratio:.4f}, weyl/supra at h=0.005 = {rw / rs:.1e}", start, 60.0)


def test_criterion_04_linear_degeneracy():
    start = time.perf_counter()
    rng = np.random.default_rng(104)
    pts = rng.uniform(-3, 3, size=(20, 2))
    worst = 0.0
    for name in ("linear", "quadratic"):
        P = catalog_lookup(name, {"V0": 1.0})
        worst = max(worst, float(np.max(np.abs(supra_tkf(P, pts[:, 0], pts[:, 1])
                                                - weyl_tkf(P, pts[:, 0], pts[:, 1])))))
    assert record(4, worst <= 1e-8, f"max|supra-weyl|={worst:.1e}", start, 60.0)


def _positive_taus(n):
    tau = np.array([m.tau for m in spectrum(build_matrix(KernelEvaluator("supra", COS), 1.0, n))])
    return np.sort(tau[tau > 0])


def test_criterion_05_operator_structure():
    start = time.perf_counter()
    structural = True
    worst_sym = worst_trace = worst_herm = 0.0
    kernels = [KernelEvaluator("supra", COS), KernelEvaluator("weyl", COS), KernelEvaluator("free"),
               KernelEvaluator("series", COS, series=SeriesConfig.for_potential(COS, 30, 30)),
               KernelEvaluator("supra", catalog_lookup("exp", {"V0": 1.0, "kappa": 1.0}))]
    for T in kernels:
        for n in (50, 200):
            M = build_matrix(T, 1.0, n)
            tau = np.array([m.tau for m in spectrum(M)])
            scale = max(np.max(np.abs(tau)), 1e-300)
            worst_herm = max(worst_herm, M.hermiticity_error())
            worst_trace = max(worst_trace, abs(tau.sum()) / max(np.abs(tau).sum(), 1e-300))
            worst_sym = max(worst_sym, np.max(np.abs(tau + tau[::-1])) / scale)
    structural = worst_herm == 0.0 and worst_trace <= 1e-10 and worst_sym <= 1e-10
    coarse, fine = _positive_taus(200), _positive_taus(300)
    moved = float(np.max(np.abs(coarse[:5] - fine[:5])))
    moved_top = float(np.max(np.abs(coarse[-5:] - fine[-5:])))
    passed = structural and moved < 1e-8
    assert record(5, passed, f"hermiticity={worst_herm:.1e}, trace={worst_trace:.1e}, symmetry={worst_sym:.1e}, "
                             f"refinement shift of 5 smallest positive tau={moved:.2e} (needs <1e-8; "
                             f"5 largest shift {moved_top:.2e})",
                  start, 300.0)


def test_criterion_06_parity_suite():
    start = time.perf_counter()
    modes = classified_spectrum(build_matrix(KernelEvaluator("supra", COS), 1.0, 200), COS)
    definite = all(m.parity in ("even", "odd") for m in modes if not m.degenerate)
    odd_nodal = all(m.nodal == "nodal" for m in modes if m.parity == "odd")
    rep = parity_partner_check(catalog_lookup("exp", {"V0": 1.0, "kappa": 1.0}), 1.0, 150)
    passed = definite and odd_nodal and rep.spectral_mismatch <= 1e-8
    assert record(6, passed, f"definite parity={definite}, odd=>nodal={odd_nodal}, "
                             f"partner spectral mismatch={rep.spectral_mismatch:.1e}", start, 300.0)


def test_criterion_07_unitary_arrival():
    start = time.perf_counter()
    modes = classified_spectrum(build_matrix(KernelEvaluator("supra", COS), 1.0, 200), COS)
    dt = 2e-5
    lines, passed = [], True
    for cls in ("nonnodal", "nodal"):
        m = select_mode(modes, 0.01, nodal=cls)
        cfg = PropagatorConfig.for_mode(1.0, m.tau, dt=dt)
        rep = propagate(embed(m, cfg), COS, cfg)
        met = arrival_metrics(rep)
        bound = max(5 * dt, 0.15 * m.tau)
        var_ok = met.interior_min_var and abs(met.t_min_var - m.tau) <= bound
        if cls == "nonnodal":
            ok = abs(met.t_max_prob - m.tau) <= bound and var_ok
            lines.append(f"nonnodal tau={m.tau:.5f} t_max_prob={met.t_max_prob:.5f} t_min_var={met.t_min_var:.5f}")
        else:
            # the arrival point itself stays dark relative to the peak density
            ratio = rep.origin_ratio()
            ok = ratio < 0.05 and var_ok
            lines.append(f"nodal tau={m.tau:.5f} origin/max density={ratio:.1e} t_min_var={met.t_min_var:.5f}")
        passed = passed and ok
    assert record(7, passed, "; ".join(lines), start, 600.0)


def _compare(V0, k, l, n, N):
    cfg = load_config(overrides=[f"potential.params={{'V0': {V0}, 'k': {k}}}", f"confinement.l={l}",
                                 f"confinement.n_quad={n}", f"evolve.N={N}", "eigen.select_tau=0.1",
                                 "kernel.workers=4"])
    return run_compare(cfg)


@pytest.mark.slow
def test_criterion_08_comparison_regimes():
    start = time.perf_counter()
    a = _compare(5.0, 5.0, 3.0, 600, 4096)
    ok_a = a["sharpness_ratio"] > 1 and a["supra"]["arrival_error"] <= a["weyl"]["arrival_error"]
    b = _compare(5.0, 1.0, 10.0, 2200, 16384)
    ok_b = (not b["weyl"]["interior_arrival"]) or b["weyl"]["arrival_error"] >= 3 * b["supra"]["arrival_error"]
    detail = (f"(5,5,3): sharpness ratio={a['sharpness_ratio']:.3f}, errors supra={a['supra']['arrival_error']:.2e} "
              f"weyl={a['weyl']['arrival_error']:.2e}; (5,1,10): weyl interior arrival={b['weyl']['interior_arrival']}, "
              f"errors supra={b['supra']['arrival_error']:.2e} weyl={b['weyl']['arrival_error']:.2e}")
    assert record(8, ok_a and ok_b, detail, start, 1800.0)


def test_criterion_09_propagator_fidelity():
    start = time.perf_counter()
    cfg = PropagatorConfig(L=12.0, N=1024, dt=1e-3, t_max=1.0)
    rep = propagate(gaussian_packet(cfg, 0.5), None, cfg)
    exact = 0.25 * (1 + (rep.times / (2 * 0.25)) ** 2)
    law = float(np.max(np.abs(rep.var_q / exact - 1)))
    norm = float(np.max(np.abs(rep.norm - 1)))
    # splitting is exact without a potential, so the time-step order is probed in a harmonic well
    osc = catalog_lookup("quadratic", {"V0": 1.0})
    var = []
    for dt in (4e-3, 2e-3, 1e-3):
        c = PropagatorConfig(L=12.0, N=1024, dt=dt, t_max=1.0)
        r = propagate(gaussian_packet(c, 0.5, q0=1.0), osc, c)
        var.append(r.var_q[:: int(round(4e-3 / dt))])
        norm = max(norm, float(np.max(np.abs(r.norm - 1))))
    ratio = float(np.max(np.abs(var[0] - var[1])) / np.max(np.abs(var[1] - var[2])))
    passed = law <= 1e-6 and norm <= 1e-10 and 3.5 <= ratio <= 4.5
    assert record(9, passed, f"variance law rel err={law:.1e}, norm drift={norm:.1e}, Richardson ratio={ratio:.4f}",
                  start, 120.0)


def test_criterion_10_separability_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(110)
    uv = rng.uniform(-3, 3, size=(200, 2))
    failures = []
    for name in CATALOG_NAMES:
        P = catalog_lookup(name, {p: (2.0 if p == "c" else 1.0) for p in catalog_params(name)})
        res = np.max(separability_residual(P, uv[:, 0], uv[:, 1]) / (1 + np.abs(P.F(uv[:, 0]) * P.G(uv[:, 1]))))
        t1 = theorem1_check(P, uv)
        ok = res <= 1e-11 and t1.max_h_asymmetry <= 1e-10 and t1.max_G_oddness_violation <= 1e-10
        if t1.max_h_catalog_mismatch is not None:
            ok = ok and t1.max_h_catalog_mismatch <= 1e-10
        if name != "free":
            t2 = theorem2_test(P, 12, np.linspace(-2.9, 3.1, 41))
            ok = ok and t2.separable and t2.G_reconstruction_error <= 1e-10
        if not ok:
            failures.append(name)
    assert record(10, not failures, f"{len(CATALOG_NAMES) - len(failures)}/{len(CATALOG_NAMES)} entries pass",
                  start, 60.0)


def summary_lines():
    return [f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} - {detail}" for k, (ok, detail) in sorted(RESULTS.items())]


if __name__ == "__main__":
    import sys
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"] + sys.argv[1:]))
