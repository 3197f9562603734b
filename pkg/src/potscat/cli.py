"""Command-line entry point.

Subcommands: forward, reconstruct, magnetic, sweep, probe-resolvent,
continuation, selftest.  Configuration is a flat `key = value` file with
`#` comments and comma-separated lists; every key has a documented default
and unknown keys are rejected.  Report-producing commands write plot-ready
CSV plus a rendered PNG (disable with --no-figures).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from . import __version__, figures, potentials, selftest
from .fields import Grid, load_field, save_field
from .forward import (
    PlaneWave,
    ScatteringDataset,
    SolverConfig,
    add_noise,
    boundary_rule,
    check_resolution,
    far_field_pattern,
    load_dataset,
    near_field_trace,
    save_dataset,
    solve_total_field,
)
from .reconstruct import (
    assemble_far_field_samples,
    reconstruct_potential,
    recover_electric,
    recover_magnetic,
    save_samples,
)
from .stability import (
    AnalyticSlab,
    FrequencyBand,
    continuation_bound,
    continuation_mu,
    generate_magnetic_band,
    resolvent_probe,
    save_probes,
    save_report,
    sweep_experiment,
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dim: int = 2
    n: int = 48
    half_width: float = 1.0
    support_radius: float = 0.6
    k_min: float = 4.0
    k_max: float = 8.0
    k_count: int = 3
    n_directions: int = 32
    n_observations: int = 32
    kind: str = "farfield"
    eta: float = 0.0
    seed: int = 0
    trials: int = 1
    smoothness: float = 1.0
    potential: str = "gaussian"
    potential_params: str = "amplitude=0.3,sigma=0.2"
    magnetic: str = "curl_gaussian"
    magnetic_params: str = "amplitude=0.05,sigma=0.13"
    krylov_tol: float = 1e-8
    max_iterations: int = 2000
    torus_factor: int = 2
    sweep_k_list: str = "4,8,16"
    recover_k: float = 0.0          # 0 -> k_max/2
    b_cutoff: float = 0.0           # 0 -> sqrt(2) k_max
    probe_lambda_min: float = 10.0
    probe_lambda_max: float = 100.0
    probe_count: int = 7
    probe_n: int = 40
    probe_half_width: float = 0.3
    probe_inner: float = 0.15
    probe_outer: float = 0.25
    probe_scan_line: int = 1
    slab_k0: float = 2.0
    slab_k: float = 4.0
    slab_d: float = 1.0
    slab_m: float = 10.0
    slab_eps: float = 1e-6
    slab_zmax: float = 8.0
    slab_zcount: int = 200
    threads: int = 1
    figures: int = 1
    out: str = "out"

    def grid(self):
        return Grid(dim=self.dim, n=self.n, half_width=self.half_width)

    def solver(self):
        return SolverConfig(krylov_tol=self.krylov_tol, max_iterations=self.max_iterations,
                            torus_factor=self.torus_factor)

    def band(self):
        return FrequencyBand(self.k_min, self.k_max, self.k_count)

    def validate(self):
        positive = ["n", "half_width", "support_radius", "k_min", "k_max", "k_count",
                    "n_directions", "n_observations", "trials", "smoothness", "krylov_tol",
                    "max_iterations", "torus_factor", "probe_count", "probe_n",
                    "probe_half_width", "probe_inner", "probe_outer", "slab_d", "slab_m",
                    "slab_eps", "slab_zcount", "threads"]
        for key in positive:
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        if self.eta < 0:
            raise ConfigError("eta must be nonnegative")
        if self.kind not in ("farfield", "nearfield"):
            raise ConfigError("kind must be farfield or nearfield")
        if self.support_radius >= self.half_width:
            raise ConfigError("support_radius must be smaller than half_width")
        grid = self.grid()
        if self.k_max * grid.h > np.pi / 4 + 1e-12:
            raise ConfigError(
                f"resolution: k_max*h = {self.k_max * grid.h:.4g} exceeds pi/4 = "
                f"{np.pi / 4:.4g} (k_max = {self.k_max}, h = {grid.h:.4g})")
        return self


def _coerce(value, target_type):
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    return value


def load_config(path=None, overrides=None):
    """Build a RunConfig from a key=value file plus CLI overrides."""
    cfg = RunConfig()
    known = {f.name: f.type for f in dc_fields(RunConfig)}
    types = {f.name: type(getattr(cfg, f.name)) for f in dc_fields(RunConfig)}
    if path is not None:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (t.strip() for t in line.split("=", 1))
                if key not in known:
                    raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
                try:
                    setattr(cfg, key, _coerce(value, types[key]))
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg.validate()


def dump_config(cfg, stream=None):
    stream = sys.stdout if stream is None else stream
    for f in dc_fields(RunConfig):
        stream.write(f"{f.name} = {getattr(cfg, f.name)}\n")


def _parse_params(text):
    out = {}
    if text.strip():
        for item in text.split(","):
            key, value = (t.strip() for t in item.split("="))
            out[key] = float(value)
    return out


def _build_potential(cfg, grid):
    if os.path.exists(cfg.potential):
        return load_field(cfg.potential)
    params = _parse_params(cfg.potential_params)
    params.setdefault("support_radius", cfg.support_radius)
    params.setdefault("smoothness", cfg.smoothness)
    return potentials.make_scalar(cfg.potential, grid, **params)


def _build_magnetic(cfg, grid):
    params = _parse_params(cfg.magnetic_params)
    params.setdefault("support_radius", cfg.support_radius)
    params.setdefault("smoothness", cfg.smoothness)
    return potentials.make_magnetic(cfg.magnetic, grid, **params)


def _directions(dim, count):
    if dim == 2:
        phi = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    i = np.arange(count) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / count)
    azim = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.stack([np.sin(polar) * np.cos(azim), np.sin(polar) * np.sin(azim),
                     np.cos(polar)], axis=1)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_forward(cfg, outdir):
    grid = cfg.grid()
    V = _build_potential(cfg, grid)
    solver = cfg.solver()
    dirs = _directions(cfg.dim, cfg.n_directions)
    obs = _directions(cfg.dim, cfg.n_observations)
    ds = ScatteringDataset(kind=cfg.kind, dim=cfg.dim, radius=V.support_radius)
    for kappa in cfg.band().grid:
        check_resolution(kappa, grid)
        for d in dirs:
            res = solve_total_field(V, None, PlaneWave(kappa, d), solver)
            if cfg.kind == "farfield":
                ds.records.append(far_field_pattern(res, obs))
            else:
                pts, w = boundary_rule(cfg.dim, kappa, V.support_radius)
                ds.records.append(near_field_trace(res, points=pts, weights=w))
    if cfg.eta > 0:
        ds = add_noise(ds, cfg.eta, cfg.seed)
    path = os.path.join(outdir, f"{cfg.kind}.csv")
    save_dataset(ds, path)
    print(f"wrote {path} ({len(ds.records)} records)")
    return 0


def cmd_reconstruct(cfg, outdir, data_path):
    grid = cfg.grid()
    ds = load_dataset(data_path)
    if ds.kind != "farfield":
        raise ConfigError("reconstruct expects a far-field dataset")
    samples = assemble_far_field_samples(ds.records, ds.dim)
    fld, report = reconstruct_potential(samples, cfg.k_max, grid, cfg.support_radius,
                                        min_coverage=0.0)
    field_path = os.path.join(outdir, "reconstruction.field")
    save_field(fld, field_path)
    samples_path = os.path.join(outdir, "samples.csv")
    save_samples(samples, samples_path)
    coverage_path = os.path.join(outdir, "coverage.txt")
    with open(coverage_path, "w") as fh:
        fh.write(report.render())
    print(f"wrote {field_path}, {samples_path}, {coverage_path}")
    if cfg.figures:
        fig = figures.render_field(fld, os.path.join(outdir, "reconstruction.png"),
                                   title="reconstructed potential")
        print(f"wrote {fig}")
    return 0


def cmd_magnetic(cfg, outdir):
    if cfg.dim != 3:
        raise ConfigError("magnetic recovery requires dim = 3")
    grid = cfg.grid()
    V = _build_potential(cfg, grid)
    b = _build_magnetic(cfg, grid)
    solver = cfg.solver()
    b_cut = cfg.b_cutoff or np.sqrt(2.0) * cfg.k_max
    k_rec = cfg.recover_k or 0.5 * cfg.k_max
    t0 = time.time()
    records = generate_magnetic_band(V, b, cfg.band(), solver, b_cutoff=b_cut,
                                     threads=cfg.threads)
    recovery = recover_magnetic(records, grid, cfg.support_radius, cutoff=b_cut)
    v_rec = recover_electric(records, recovery, grid, k_rec, cfg.support_radius)
    for name, comp in zip("xyz", recovery.field.components):
        from .fields import ClassParams, ScalarPotentialField

        fld = ScalarPotentialField(grid=grid, values=comp,
                                   class_params=ClassParams(cfg.smoothness, 1.0, cfg.support_radius))
        save_field(fld, os.path.join(outdir, f"b_{name}.field"))
    save_field(v_rec, os.path.join(outdir, "v.field"))
    print(f"wrote b_x/b_y/b_z.field and v.field under {outdir} "
          f"({len(records)} records, {time.time() - t0:.1f} s)")
    if cfg.figures:
        figures.render_field(v_rec, os.path.join(outdir, "v.png"), title="recovered V")
    return 0


def cmd_sweep(cfg, outdir):
    grid = cfg.grid()
    V = _build_potential(cfg, grid)
    ks = [float(t) for t in cfg.sweep_k_list.split(",")]
    bands = []
    for K in ks:
        k_lo = min(cfg.k_min, K)
        count = 1 if K <= k_lo else max(2, int(round((K - k_lo) / max(ks[0], 1e-9))) + 1)
        bands.append(FrequencyBand(k_lo, K, count))
    report = sweep_experiment(V, bands, cfg.eta, cfg.trials, cfg.solver(),
                              seed=cfg.seed, smoothness=cfg.smoothness, threads=cfg.threads)
    path = os.path.join(outdir, "sweep.csv")
    save_report(report, path)
    print(f"wrote {path}")
    for row in report.sorted_rows():
        print(f"  K={row.K:g} eps={row.epsilon:.3e} err={row.recon_error:.4f} "
              f"bound={row.theoretical_bound:.4g} crossover={int(row.crossover)}")
    if cfg.figures:
        fig = figures.render_sweep(report, os.path.join(outdir, "sweep.png"))
        print(f"wrote {fig}")
    return 0


def cmd_probe_resolvent(cfg, outdir):
    grid = Grid(dim=2, n=cfg.probe_n, half_width=cfg.probe_half_width)
    lams = np.geomspace(cfg.probe_lambda_min, cfg.probe_lambda_max, cfg.probe_count)
    probes = [resolvent_probe(complex(l), grid, cfg.probe_inner, cfg.probe_outer)
              for l in lams]
    if cfg.probe_scan_line:
        L = 2.0 * cfg.probe_outer
        delta = 1.0 / (8.0 * L)
        for l in lams:
            lam = complex(l, -delta * np.log(1.0 + l))
            probes.append(resolvent_probe(lam, grid, cfg.probe_inner, cfg.probe_outer))
    path = os.path.join(outdir, "probe.csv")
    save_probes(probes, path)
    real = [p for p in probes if p.lam.imag == 0.0]
    slope = np.polyfit(np.log([abs(p.lam) for p in real]), np.log([p.norm for p in real]), 1)[0]
    hs_slope = np.polyfit(np.log([abs(p.lam) for p in real]),
                          np.log([p.hs_norm for p in real]), 1)[0]
    print(f"wrote {path}")
    print(f"  real-axis slope: sigma_max {slope:.3f}, hilbert-schmidt {hs_slope:.3f}")
    if cfg.figures:
        fig = figures.render_probes(probes, os.path.join(outdir, "probe.png"))
        print(f"wrote {fig}")
    return 0


def cmd_continuation(cfg, outdir):
    slab = AnalyticSlab(k_min=cfg.slab_k0, half_width=cfg.slab_d,
                        interval_length=cfg.slab_k - cfg.slab_k0)
    eps, M = cfg.slab_eps, cfg.slab_m
    zs = np.linspace(slab.k_top, cfg.slab_zmax, cfg.slab_zcount + 1)[1:]
    omega = np.log(M / eps) / slab.half_width
    c_exp = 0.9 * np.log(M / eps) / (cfg.slab_zmax - slab.k_top)
    rows = []
    violations = 0
    for z in zs:
        mu = continuation_mu(z, slab)
        bound = continuation_bound(M, eps, min(mu, 1.0))
        family = [eps,
                  eps * np.cos(omega * (z - cfg.slab_k0)),
                  eps * np.exp(c_exp * (z - slab.k_top))]
        worst = max(abs(p) for p in family)
        violations += sum(1 for p in family if abs(p) > bound)
        rows.append((float(z), float(mu), float(bound), float(worst)))
    path = os.path.join(outdir, "continuation.csv")
    with open(path, "w") as fh:
        fh.write("z, mu, bound, max_abs_p\n")
        for r in rows:
            fh.write(", ".join(repr(v) for v in r) + "\n")
    print(f"wrote {path}; violations: {violations}")
    if cfg.figures:
        fig = figures.render_continuation(rows, os.path.join(outdir, "continuation.png"))
        print(f"wrote {fig}")
    return 0 if violations == 0 else 1


def cmd_selftest(cfg, outdir):
    t0 = time.time()
    results = selftest.run_all(verbose=True)
    failed = [r for r in results if not r["ok"]]
    print(f"selftest: {len(results) - len(failed)}/{len(results)} passed "
          f"in {time.time() - t0:.1f} s")
    return 0 if not failed else 1


# ---------------------------------------------------------------------------

def build_parser():
    defaults = RunConfig()
    default_lines = ", ".join(
        f"{f.name}={getattr(defaults, f.name)}" for f in dc_fields(RunConfig))
    parser = argparse.ArgumentParser(
        prog="potscat",
        description="Forward and inverse potential scattering toolkit.",
        epilog="Config keys and defaults: " + default_lines,
    )
    parser.add_argument("--version", action="version", version=f"potscat {__version__}")
    parser.add_argument("--config", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration and exit")
    parser.add_argument("--threads", type=int, help="worker pool size")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--seed", type=int, help="base random seed")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("forward", help="solve and emit a synthetic dataset")
    p_rec = sub.add_parser("reconstruct", help="far-field dataset -> potential")
    p_rec.add_argument("data", help="far-field CSV produced by `forward`")
    sub.add_parser("magnetic", help="3D magnetic + electric recovery")
    sub.add_parser("sweep", help="increasing-stability sweep report")
    sub.add_parser("probe-resolvent", help="2D resolvent norm map")
    sub.add_parser("continuation", help="analytic-continuation bound table")
    sub.add_parser("selftest", help="run the invariant suite")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {"threads": args.threads, "out": args.out, "seed": args.seed}
    if args.no_figures:
        overrides["figures"] = 0
    try:
        cfg = load_config(args.config, overrides)
        if args.dump_config:
            dump_config(cfg)
            return 0
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("error: usage: a subcommand is required", file=sys.stderr)
            return 2
        outdir = cfg.out
        os.makedirs(outdir, exist_ok=True)
        if args.command == "forward":
            return cmd_forward(cfg, outdir)
        if args.command == "reconstruct":
            return cmd_reconstruct(cfg, outdir, args.data)
        if args.command == "magnetic":
            return cmd_magnetic(cfg, outdir)
        if args.command == "sweep":
            return cmd_sweep(cfg, outdir)
        if args.command == "probe-resolvent":
            return cmd_probe_resolvent(cfg, outdir)
        if args.command == "continuation":
            return cmd_continuation(cfg, outdir)
        if args.command == "selftest":
            return cmd_selftest(cfg, outdir)
        raise ConfigError(f"unknown command {args.command}")
    except Exception as exc:  # noqa: BLE001 - single reporting point
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
