"""Acceptance suite: one test per criterion, printed as pass/fail lines.

Every tolerance is pinned here.  Two legs are implemented exactly as stated
although the measured physics decays faster than the stated rate window
(the rates encode upper bounds that are not tight for smooth potentials);
they are expected to fail and their measured values are printed:
  - criterion 3, 2D remainder slope (-0.5 +/- 0.2; measured ~ -1.0)
  - criterion 7, real-axis operator-norm slope (-0.5 +/- 0.15; measured
    ~ -1.0; the Hilbert-Schmidt norm, the quantity the kernel envelope
    controls directly, does follow -0.5 and is printed alongside)
"""

import time

import numpy as np
import pytest

from potscat.fields import Grid, fourier_forward, l2_error, l2_norm, vector_l2_error, vector_l2_norm
from potscat.forward import (
    PlaneWave,
    ScatteringDataset,
    SolverConfig,
    dense_system_matrix,
    dtn_circle,
    far_field_pattern,
    near_field_trace,
    solve_total_field,
)
from potscat.potentials import bump_potential, curl_gaussian_magnetic, gaussian_potential
from potscat.reconstruct import (
    direction_pair_for_xi,
    incident_pair_for_xi,
    near_field_fourier_estimate,
    recover_electric,
    recover_magnetic,
)
from potscat.stability import (
    AnalyticSlab,
    FrequencyBand,
    continuation_bound,
    continuation_mu,
    generate_magnetic_band,
    resolvent_probe,
    stability_exponents,
    sweep_experiment,
)
from tests.test_forward import green_identity_residual


def report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_1_dense_oracle():
    """Iterative solve matches the dense solve of the identical system."""
    t0 = time.time()
    grid = Grid(dim=2, n=24, half_width=1.0)
    V = gaussian_potential(grid, amplitude=0.3, sigma=0.25, support_radius=0.6)
    wave = PlaneWave(4.0, np.array([1.0, 0.0]))
    res = solve_total_field(V, None, wave)
    A, idx, uinc = dense_system_matrix(V, wave)
    u_dense = np.linalg.solve(A, uinc)
    rel = np.linalg.norm(res.u.ravel()[idx] - u_dense) / np.linalg.norm(u_dense)
    elapsed = time.time() - t0
    ok = rel <= 1e-8 and elapsed < 10.0
    assert report("1 dense-oracle", ok, f"rel L2 {rel:.3e}, {elapsed:.1f} s")


def test_criterion_2_green_identity():
    """Identity residual small at N=64 and shrinking >= 3x from N=32."""
    t0 = time.time()
    r32 = green_identity_residual(32, kappa=8.0, trace="grid")
    r64 = green_identity_residual(64, kappa=8.0, trace="grid")
    elapsed = time.time() - t0
    ok = r64 <= 0.05 and (r32 / r64) >= 3.0 and elapsed < 60.0
    assert report("2 green-identity", ok,
                  f"residual(64) {r64:.3e}, ratio 32->64 {r32 / r64:.2f}, {elapsed:.1f} s")


KAPPAS_DECAY = [8.0, 12.0, 16.0, 24.0, 32.0]


def test_criterion_3_remainder_decay_3d():
    """Near-field estimator error vs Vhat at fixed |xi| = 2: slope -1 +/- 0.25."""
    t0 = time.time()
    grid = Grid(dim=3, n=32, half_width=0.375)
    V = gaussian_potential(grid, amplitude=0.05, sigma=0.075, support_radius=0.23)
    xi = np.array([2.0, 0.0, 0.0])
    truth = fourier_forward(V, xi)
    errs = []
    for kappa in KAPPAS_DECAY:
        pair = incident_pair_for_xi(xi, kappa)
        # measure on a circle strictly outside the support so the trace
        # kernel is evaluated away from grid singularities
        ds = ScatteringDataset(kind="nearfield", dim=3, radius=0.3)
        for d in (pair.d1, pair.d2):
            res = solve_total_field(V, None, PlaneWave(kappa, d))
            ds.records.append(near_field_trace(res, radius=0.3))
        est = near_field_fourier_estimate(None, ds, pair)
        errs.append(abs(est - truth))
    slope = np.polyfit(np.log(KAPPAS_DECAY), np.log(errs), 1)[0]
    elapsed = time.time() - t0
    ok = -1.25 <= slope <= -0.75 and elapsed < 600.0
    assert report("3 remainder-decay-3d", ok, f"slope {slope:.3f}, {elapsed:.1f} s")


def test_criterion_3_remainder_decay_2d():
    """Far-field estimator error at fixed |xi| = 2: stated window -0.5 +/- 0.2.

    The measured decay for a smooth potential is ~ kappa^-1 (the stated
    rate is the Cauchy-Schwarz/resolvent upper bound, which is not tight),
    so this leg fails as specified; see the decisions ledger.
    """
    t0 = time.time()
    grid = Grid(dim=2, n=96, half_width=1.0)
    V = gaussian_potential(grid, amplitude=0.05, sigma=0.2, support_radius=0.65)
    xi = np.array([2.0, 0.0])
    truth = fourier_forward(V, xi)
    errs = []
    for kappa in KAPPAS_DECAY:
        pair = direction_pair_for_xi(xi, kappa)
        res = solve_total_field(V, None, PlaneWave(kappa, pair.d))
        rec = far_field_pattern(res, pair.theta[None, :])
        errs.append(abs(rec.values[0] - truth))
    slope = np.polyfit(np.log(KAPPAS_DECAY), np.log(errs), 1)[0]
    elapsed = time.time() - t0
    ok = -0.7 <= slope <= -0.3 and elapsed < 600.0
    report("3 remainder-decay-2d", ok,
           f"slope {slope:.3f} vs stated window [-0.7, -0.3], {elapsed:.1f} s")
    assert ok, (f"2D slope {slope:.3f} outside the stated window [-0.7, -0.3]; "
                "the smooth-potential remainder decays like 1/kappa (see ledger)")


def test_criterion_4_increasing_stability_sweep():
    """2D bump, eta = 0.01, 5 trials: error non-increasing, err(16) <= 0.6 err(4)."""
    t0 = time.time()
    grid = Grid(dim=2, n=48, half_width=1.0)
    V = bump_potential(grid, amplitude=0.3, radius=0.5, support_radius=0.6)
    bands = [FrequencyBand(4.0, 4.0, 1), FrequencyBand(4.0, 8.0, 2), FrequencyBand(4.0, 16.0, 3)]
    rep = sweep_experiment(V, bands, eta=0.01, trials=5, seed=42)
    errs = {row.K: row.recon_error for row in rep.rows}
    elapsed = time.time() - t0
    monotone = errs[8.0] <= 1.05 * errs[4.0] and errs[16.0] <= 1.05 * errs[8.0]
    strong = errs[16.0] <= 0.6 * errs[4.0]
    ok = monotone and strong and elapsed < 900.0
    assert report("4 stability-sweep", ok,
                  f"errors {errs[4.0]:.4f} / {errs[8.0]:.4f} / {errs[16.0]:.4f}, "
                  f"{elapsed:.1f} s")


def test_criterion_5_exponent_formulas():
    e3 = stability_exponents(1.0, 3)
    e2 = stability_exponents(1.0, 2)
    ok = (e3.alpha, e3.beta) == (1.2, 0.4) and (e2.alpha, e2.beta) == (0.3, 0.1)
    assert report("5 exponents", ok,
                  f"3D ({e3.alpha}, {e3.beta}), 2D ({e2.alpha}, {e2.beta})")


def test_criterion_6_continuation_bound():
    """Three test families, 200 z samples each: zero violations."""
    t0 = time.time()
    slab = AnalyticSlab(k_min=2.0, half_width=1.0, interval_length=2.0)
    M, eps, z_max = 10.0, 1e-6, 8.0
    omega = np.log(M / eps) / slab.half_width
    c = 0.9 * np.log(M / eps) / (z_max - slab.k_top)
    zs = np.linspace(slab.k_top, z_max, 201)[1:]
    violations = 0
    for z in zs:
        mu = min(continuation_mu(z, slab), 1.0)
        bound = continuation_bound(M, eps, mu)
        for p in (eps, eps * np.cos(omega * (z - slab.k_min)),
                  eps * np.exp(c * (z - slab.k_top))):
            violations += abs(p) > bound
    elapsed = time.time() - t0
    ok = violations == 0 and elapsed < 1.0
    assert report("6 continuation", ok, f"{violations} violations over 600 samples, "
                                        f"{elapsed:.2f} s")


PROBE_GEOM = dict(n=40, half_width=0.3, inner=0.15, outer=0.25)


def test_criterion_7_resolvent_scaling():
    """Real-axis slope window (stated -0.5 +/- 0.15) and sector envelope.

    The operator norm of the sampled cutoff kernel decays like 1/lambda at
    desk scale, faster than the stated window, so the slope leg fails as
    specified; the Hilbert-Schmidt norm (the quantity the kernel envelope
    bounds directly) follows -0.5 and is printed for reference.  The
    complex-line envelope check passes.
    """
    t0 = time.time()
    grid = Grid(dim=2, n=PROBE_GEOM["n"], half_width=PROBE_GEOM["half_width"])
    lams = np.geomspace(10.0, 100.0, 7)
    probes = [resolvent_probe(l + 0j, grid, PROBE_GEOM["inner"], PROBE_GEOM["outer"])
              for l in lams]
    norms = np.array([p.norm for p in probes])
    hs = np.array([p.hs_norm for p in probes])
    slope = np.polyfit(np.log(lams), np.log(norms), 1)[0]
    hs_slope = np.polyfit(np.log(lams), np.log(hs), 1)[0]
    C = float(np.exp(np.mean(np.log(norms) + 0.5 * np.log(lams))))

    L = 2.0 * PROBE_GEOM["outer"]
    delta = 1.0 / (8.0 * L)
    ratios = []
    for lam_r in (10.0, 30.0, 100.0):
        lam = complex(lam_r, -delta * np.log(1.0 + lam_r))
        p = resolvent_probe(lam, grid, PROBE_GEOM["inner"], PROBE_GEOM["outer"])
        env = C * abs(lam) ** -0.5 * np.exp(L * abs(lam.imag))
        ratios.append(p.norm / env)
    envelope_ok = all(1.0 / 3.0 <= r <= 3.0 for r in ratios)
    elapsed = time.time() - t0
    slope_ok = -0.65 <= slope <= -0.35
    report("7 resolvent-scaling", slope_ok and envelope_ok and elapsed < 300.0,
           f"sigma-max slope {slope:.3f} (stated [-0.65, -0.35]); "
           f"HS slope {hs_slope:.3f}; envelope ratios "
           + ", ".join(f"{r:.2f}" for r in ratios) + f"; {elapsed:.1f} s")
    assert envelope_ok, f"envelope ratios {ratios} outside [1/3, 3]"
    assert elapsed < 300.0
    assert slope_ok, (f"sigma-max slope {slope:.3f} outside the stated window; "
                      "the sampled-kernel operator norm decays ~ 1/lambda while the "
                      "Hilbert-Schmidt norm follows -0.5 (see ledger)")


MAG = dict(n=32, half_width=0.75, support=0.5, sigma_b=0.13, sigma_v=0.14, amp=0.05)


@pytest.fixture(scope="module")
def magnetic_run():
    grid = Grid(dim=3, n=MAG["n"], half_width=MAG["half_width"])
    b = curl_gaussian_magnetic(grid, MAG["amp"], MAG["sigma_b"], MAG["support"])
    V = gaussian_potential(grid, MAG["amp"], MAG["sigma_v"], MAG["support"])
    band = FrequencyBand(8.0, 16.0, 2)
    t0 = time.time()
    records = generate_magnetic_band(V, b, band, SolverConfig(), b_cutoff=20.0,
                                     reversal_cutoff=16.0)
    recovery = recover_magnetic(records, grid, MAG["support"], cutoff=20.0)
    v_rec = recover_electric(records, recovery, grid, K=8.0, support_radius=MAG["support"])
    return dict(grid=grid, b=b, V=V, records=records, recovery=recovery,
                v_rec=v_rec, elapsed=time.time() - t0)


def test_criterion_8_magnetic_recovery(magnetic_run):
    """3D magnetic + electric recovery with divergence-free output and
    gauge-invariant data."""
    grid = magnetic_run["grid"]
    b, V = magnetic_run["b"], magnetic_run["V"]
    recovery, v_rec = magnetic_run["recovery"], magnetic_run["v_rec"]

    err_b = vector_l2_error(recovery.field, b) / vector_l2_norm(b)
    err_v = l2_error(v_rec, V) / l2_norm(V)

    worst_div = 0.0
    for key, bh in recovery.spectrum.items():
        xi = grid.dual_spacing * np.asarray(key, dtype=float)
        scale = np.linalg.norm(xi) * np.linalg.norm(bh)
        if scale > 0:
            worst_div = max(worst_div, abs(xi @ bh) / scale)

    # gauge test: b -> b + grad(phi) with smooth compact phi
    from potscat.potentials import gauge_gradient
    from potscat.fields import VectorPotentialField

    _, gphi = gauge_gradient(grid, amplitude=0.02, sigma=0.095,
                             support_radius=MAG["support"])
    b_gauged = VectorPotentialField(
        grid=grid, components=tuple(c + g for c, g in zip(b.components, gphi)),
        class_params=b.class_params)
    kappa = 16.0
    pair = direction_pair_for_xi(grid.dual_spacing * np.array([1.0, 1.0, 0.0]), kappa)
    res_a = solve_total_field(V, b, PlaneWave(kappa, pair.d))
    res_b = solve_total_field(V, b_gauged, PlaneWave(kappa, pair.d))
    a1 = far_field_pattern(res_a, pair.theta[None, :]).values[0]
    a2 = far_field_pattern(res_b, pair.theta[None, :]).values[0]
    gauge_shift = abs(a1 - a2) / abs(a1)

    elapsed = magnetic_run["elapsed"]
    ok = (err_b <= 0.25 and err_v <= 0.3 and worst_div <= 1e-12
          and gauge_shift <= 1e-6 and elapsed < 1200.0)
    assert report("8 magnetic-recovery", ok,
                  f"b err {err_b:.3f}, V err {err_v:.3f}, max xi.bhat {worst_div:.2e}, "
                  f"gauge shift {gauge_shift:.2e}, data {elapsed:.0f} s")


def test_criterion_9_dtn_consistency():
    """2D scattered traces satisfy the transparent boundary condition."""
    t0 = time.time()
    grid = Grid(dim=2, n=64, half_width=1.0)
    V = gaussian_potential(grid, 0.3, 0.2, 0.6)
    kappa, R, M = 8.0, 0.75, 256
    res = solve_total_field(V, None, PlaneWave(kappa, np.array([1.0, 0.0])))
    phi = 2.0 * np.pi * np.arange(M) / M
    pts = R * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    w = np.full(M, 2.0 * np.pi * R / M)
    rec = near_field_trace(res, radius=R, points=pts, weights=w)
    tn = dtn_circle(rec.dirichlet, kappa, R)
    rel = np.linalg.norm(tn - rec.neumann) / np.linalg.norm(rec.neumann)
    elapsed = time.time() - t0
    ok = rel <= 0.02 and elapsed < 60.0
    assert report("9 dtn-consistency", ok, f"rel mismatch {rel:.3e}, {elapsed:.1f} s")
