"""Fast invariant suite behind the `selftest` subcommand.

Each check is independent and desk-scale (the whole suite runs in well
under five minutes); failures are reported with the measured value.
"""

from __future__ import annotations

import numpy as np

from . import fields, forward, potentials, reconstruct, specialfn, stability


def _check(name, ok, detail):
    return {"name": name, "ok": bool(ok), "detail": detail}


def check_wronskian():
    xs = np.logspace(-2, 3, 40)
    worst = 0.0
    for n in (0, 1, 5, 20):
        J, Y = specialfn.cylinder_bessel(n, xs)
        Jp = specialfn.cylinder_bessel(n + 1, xs)[0]
        Yp = specialfn.cylinder_bessel(n + 1, xs)[1]
        # Z_n' = Z_{n-1} - (n/x) Z_n  via  Z_n' = -Z_{n+1} + (n/x) Z_n
        dJ = -Jp + n / xs * J
        dY = -Yp + n / xs * Y
        worst = max(worst, float(np.max(np.abs(J * dY - Y * dJ - 2.0 / (np.pi * xs)))))
    return _check("bessel wronskian", worst < 1e-10, f"max residual {worst:.2e}")


def check_sector_kernel():
    worst = 0.0
    for kappa in (1.0, 8.0, 50.0):
        for r in (0.1, 1.0, 5.0):
            a = specialfn.hankel0_sector(kappa + 0j, r)
            b = specialfn.green_kernel(2, kappa, r)
            worst = max(worst, abs(a - b) / abs(b))
    return _check("sector kernel vs real axis", worst < 1e-8, f"max rel dev {worst:.2e}")


def check_kernel_gradient():
    rng = np.random.default_rng(3)
    worst = 0.0
    for dim in (2, 3):
        x = rng.normal(size=dim)
        y = x + 0.7 * rng.normal(size=dim)
        g = specialfn.green_kernel_gradient(dim, 3.0, x, y)
        h = 1e-5
        for ax in range(dim):
            e = np.zeros(dim)
            e[ax] = h
            fd = (specialfn.green_kernel(dim, 3.0, np.linalg.norm(x + e - y))
                  - specialfn.green_kernel(dim, 3.0, np.linalg.norm(x - e - y))) / (2 * h)
            worst = max(worst, abs(g[ax] - fd) / abs(fd))
    return _check("kernel gradient vs differences", worst < 1e-6, f"max rel dev {worst:.2e}")


def check_parseval():
    grid = fields.Grid(dim=2, n=32, half_width=1.0)
    fld = potentials.gaussian_potential(grid, 0.7, 0.25, 0.8)
    a = fields.sobolev_norm(fld, 0.0)
    b = float(np.sqrt(np.sum(fld.values**2) * grid.cell_volume))
    dev = abs(a - b) / b
    return _check("parseval s=0", dev < 1e-10, f"rel dev {dev:.2e}")


def check_roundtrip():
    grid = fields.Grid(dim=2, n=32, half_width=1.0)
    fld = potentials.gaussian_potential(grid, 0.5, 0.3, 0.9)
    spec = fields.lattice_spectrum(fld.values, grid)
    samples = fields.FourierSampleSet(dim=2, ball_factor=2.0)
    dxi = grid.dual_spacing
    half = grid.n // 2
    for i in range(-half + 1, half):
        for j in range(-half + 1, half):
            xi = dxi * np.array([i, j], dtype=float)
            if np.linalg.norm(xi) <= 20.0:
                samples.add(xi, spec[i % grid.n, j % grid.n], 10.0)
    rec = fields.inverse_bandlimited(samples, 20.0, grid, 0.9)
    band = fields.lattice_field(np.where(grid.dual_radius <= 20.0, spec, 0.0), grid)
    band = np.where(grid.radius <= 0.9, np.real(band), 0.0)
    dev = np.linalg.norm(rec.values - band) / np.linalg.norm(band)
    return _check("bandlimited round trip", dev < 1e-8, f"rel dev {dev:.2e}")


def check_projection():
    grid = fields.Grid(dim=3, n=16, half_width=1.0)
    b = potentials.curl_gaussian_magnetic(grid, 0.1, 0.2, 0.7)
    proj = fields.divergence_free_project(b)
    div = fields.spectral_divergence(proj.components, grid)
    scale = max(float(np.abs(np.fft.fftn(proj.components[0])).max()), 1e-300)
    rel = float(np.abs(div).max()) / scale
    again = fields.divergence_free_project(proj)
    idem = max(float(np.abs(a - c).max()) for a, c in zip(proj.components, again.components))
    ok = rel < 1e-12 and idem < 1e-10
    return _check("divergence-free projection", ok, f"div {rel:.2e}, idempotence {idem:.2e}")


def check_free_solve():
    grid = fields.Grid(dim=2, n=24, half_width=1.0)
    V = potentials.gaussian_potential(grid, 0.0, 0.2, 0.5)
    res = forward.solve_total_field(V, None, forward.PlaneWave(4.0, np.array([1.0, 0.0])))
    dev = float(np.max(np.abs(res.u - res.incident)))
    return _check("free solve is incident", dev < 1e-12, f"max dev {dev:.2e}")


def check_born():
    grid = fields.Grid(dim=2, n=48, half_width=1.0)
    V = potentials.gaussian_potential(grid, 0.05, 0.2, 0.6)
    kappa = 8.0
    pair = reconstruct.direction_pair_for_xi(np.array([2.0, 0.0]), kappa)
    res = forward.solve_total_field(V, None, forward.PlaneWave(kappa, pair.d))
    rec = forward.far_field_pattern(res, pair.theta[None, :])
    oracle = forward.born_oracle(V, kappa, pair.theta, pair.d)
    dev = abs(rec.values[0] - oracle) / abs(oracle)
    return _check("weak far field near Born", dev < 0.05, f"rel dev {dev:.2e}")


def check_dtn():
    grid = fields.Grid(dim=2, n=48, half_width=1.0)
    V = potentials.gaussian_potential(grid, 0.3, 0.2, 0.55)
    kappa = 6.0
    res = forward.solve_total_field(V, None, forward.PlaneWave(kappa, np.array([1.0, 0.0])))
    rec = forward.near_field_trace(res, radius=0.7)
    tn = forward.dtn_circle(rec.dirichlet, kappa, 0.7)
    dev = np.linalg.norm(tn - rec.neumann) / np.linalg.norm(rec.neumann)
    return _check("circle DtN consistency", dev < 0.02, f"rel dev {dev:.2e}")


def check_exponents():
    e3 = stability.stability_exponents(1.0, 3)
    e2 = stability.stability_exponents(1.0, 2)
    ok = (abs(e3.alpha - 1.2) < 1e-15 and abs(e3.beta - 0.4) < 1e-15
          and abs(e2.alpha - 0.3) < 1e-15 and abs(e2.beta - 0.1) < 1e-15)
    return _check("stability exponents", ok,
                  f"3D ({e3.alpha}, {e3.beta}), 2D ({e2.alpha}, {e2.beta})")


def check_continuation():
    slab = stability.AnalyticSlab(k_min=2.0, half_width=1.0, interval_length=2.0)
    eps, M = 1e-6, 10.0
    zs = np.linspace(4.01, 8.0, 50)
    bad = 0
    for z in zs:
        mu = stability.continuation_mu(z, slab)
        bound = stability.continuation_bound(M, eps, mu)
        for p in (eps, eps * np.cos(3.0 * (z - 2.0)), eps * np.exp(0.5 * np.log(M / eps) * (z - 4.0) / 4.0)):
            if abs(p) > bound:
                bad += 1
    return _check("continuation bound families", bad == 0, f"{bad} violations")


def check_noise_determinism():
    grid = fields.Grid(dim=2, n=24, half_width=1.0)
    V = potentials.gaussian_potential(grid, 0.2, 0.2, 0.5)
    band = stability.FrequencyBand(4.0, 4.0, 1)
    ds = stability.generate_far_field_band(V, band)
    n1 = forward.add_noise(ds, 0.05, seed=11)
    n2 = forward.add_noise(ds, 0.05, seed=11)
    same = all(np.array_equal(a.values, b.values) for a, b in zip(n1.records, n2.records))
    zero = forward.add_noise(ds, 0.0, seed=5)
    unchanged = all(np.array_equal(a.values, b.values) for a, b in zip(ds.records, zero.records))
    return _check("noise determinism", same and unchanged,
                  f"same-seed match {same}, eta=0 identity {unchanged}")


def check_resolvent_reflection():
    grid = fields.Grid(dim=2, n=24, half_width=0.3)
    lam = 12.0 - 0.4j
    a = stability.resolvent_probe(lam, grid, 0.15, 0.25)
    b = stability.resolvent_probe(-np.conj(lam), grid, 0.15, 0.25)
    dev = abs(a.norm - b.norm) / a.norm
    return _check("probe reflection symmetry", dev < 1e-8, f"rel dev {dev:.2e}")


ALL_CHECKS = [
    check_wronskian,
    check_sector_kernel,
    check_kernel_gradient,
    check_parseval,
    check_roundtrip,
    check_projection,
    check_free_solve,
    check_born,
    check_dtn,
    check_exponents,
    check_continuation,
    check_noise_determinism,
    check_resolvent_reflection,
]


def run_all(verbose=True):
    results = []
    for fn in ALL_CHECKS:
        res = fn()
        results.append(res)
        if verbose:
            status = "pass" if res["ok"] else "FAIL"
            print(f"[{status}] {res['name']}: {res['detail']}")
    return results
