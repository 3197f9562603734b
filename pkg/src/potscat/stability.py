"""Quantitative stability machinery: data discrepancy, analytic-continuation
bound, stability exponents, frequency-sweep experiments, resolvent probes.

Stability estimate (dimension-dependent exponents):

    error^2 <= K^alpha eps^2 + 1 / (K^beta (ln |ln eps|)^beta)

    3D: alpha = 6/(3+2s),      beta = 2s/(3+2s)
    2D: alpha = 3/(2(3+2s)),   beta = s/(2(3+2s))

Analytic continuation from a frequency interval (K0, K] of length a into
the slab of half-width d:

    mu(z) >= 64 a d / (3 pi^2 (a^2 + 4 d^2)) * e^{(pi/(2d)) (a/2 - z)},
    |p(z)| <= M eps^{mu(z)}   for z > K.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fields import l2_error, l2_norm
from .forward import (
    ScatteringDataset,
    SolverConfig,
    add_noise,
    dtn_circle,
    far_field_pattern,
    solve_total_field,
)
from .reconstruct import (
    assemble_far_field_samples,
    direction_pair_for_xi,
    reconstruct_potential,
)
from .specialfn import DomainError, green_kernel, in_sector, kernel_disc_average

EPS_VALIDITY = np.exp(-np.e)  # ln|ln eps| must be positive


class AlignmentError(ValueError):
    """Datasets are not sampled on matching frequencies/directions/points."""


@dataclass(frozen=True)
class FrequencyBand:
    """Finite frequency interval [k_min, k_max] with its sample grid."""

    k_min: float
    k_max: float
    count: int = 3

    def __post_init__(self):
        if not 0 < self.k_min <= self.k_max:
            raise ValueError("need 0 < k_min <= k_max")
        if self.count < 1:
            raise ValueError("count must be positive")

    @property
    def grid(self):
        if self.count == 1 or self.k_min == self.k_max:
            return [self.k_max]
        return list(np.linspace(self.k_min, self.k_max, self.count))

    @property
    def length(self):
        return self.k_max - self.k_min


@dataclass(frozen=True)
class AnalyticSlab:
    """Infinite slab (k_min, inf) x (-half_width, half_width) in the plane."""

    k_min: float
    half_width: float
    interval_length: float

    def __post_init__(self):
        if self.half_width <= 0 or self.interval_length <= 0:
            raise ValueError("half_width and interval_length must be positive")

    @property
    def k_top(self):
        return self.k_min + self.interval_length


@dataclass(frozen=True)
class StabilityExponents:
    smoothness: float
    dim: int
    alpha: float
    beta: float


def stability_exponents(s, dim):
    """Closed-form exponents of the increasing-stability estimate."""
    if s <= 0:
        raise ValueError("smoothness s must be positive")
    if dim == 3:
        return StabilityExponents(s, 3, alpha=6.0 / (3.0 + 2.0 * s), beta=2.0 * s / (3.0 + 2.0 * s))
    if dim == 2:
        return StabilityExponents(s, 2, alpha=3.0 / (2.0 * (3.0 + 2.0 * s)),
                                  beta=s / (2.0 * (3.0 + 2.0 * s)))
    raise ValueError("dim must be 2 or 3")


def mu_lower_bound(z, interval_length, half_width):
    """The continuation exponent lower bound as a pure formula of (z, a, d)."""
    a, d = float(interval_length), float(half_width)
    pref = 64.0 * a * d / (3.0 * np.pi**2 * (a**2 + 4.0 * d**2))
    return pref * np.exp((np.pi / (2.0 * d)) * (0.5 * a - np.asarray(z, dtype=float)))


def continuation_mu(z, slab):
    """mu(z) for z beyond the top of the data interval."""
    z = float(z)
    if z <= slab.k_top:
        raise DomainError(f"z = {z} must exceed the interval top K = {slab.k_top}")
    return float(mu_lower_bound(z, slab.interval_length, slab.half_width))


def continuation_bound(M, eps, mu):
    """M * eps^mu, the continued smallness bound."""
    if M <= 0:
        raise ValueError("M must be positive")
    if not 0.0 < eps < 1.0:
        raise DomainError("the bound is vacuous unless eps is in (0, 1)")
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must lie in (0, 1]")
    return float(M * eps**mu)


def theoretical_bound(K, eps, exps):
    """K^alpha eps^2 + 1/(K^beta (ln |ln eps|)^beta), suppressed constant 1."""
    K = float(K)
    eps = float(eps)
    if K <= np.e:
        raise DomainError("K must exceed e")
    if not 0.0 < eps < EPS_VALIDITY:
        raise DomainError(f"eps must lie in (0, e^-e = {EPS_VALIDITY:.4g}) "
                          "for the iterated logarithm to be positive")
    loglog = np.log(abs(np.log(eps)))
    return float(K**exps.alpha * eps**2 + 1.0 / (K**exps.beta * loglog**exps.beta))


def crossover_k(eps, exps):
    """K* where d/dK of the bound vanishes (error stops improving)."""
    loglog = np.log(abs(np.log(eps)))
    c = loglog**-exps.beta
    return float((exps.beta * c / (exps.alpha * eps**2)) ** (1.0 / (exps.alpha + exps.beta)))


# ---------------------------------------------------------------------------
# data discrepancy
# ---------------------------------------------------------------------------

def data_discrepancy(ds1, ds2):
    """Squared multi-frequency data discrepancy between two datasets.

    far field: max over records/directions of |A1 - A2|^2.
    near field: max over (kappa, d) of
        2 (kappa^2 ||du||^2_{L2(dB_R)} + ||dn du||^2_{L2(dB_R)}),
    where in 2D the Neumann term is evaluated through the circle DtN map of
    the Dirichlet difference (transparent boundary condition) and in 3D from
    the measured Neumann traces directly.
    """
    if ds1.kind != ds2.kind or ds1.dim != ds2.dim or len(ds1.records) != len(ds2.records):
        raise AlignmentError("datasets differ in kind, dimension, or record count")
    worst = 0.0
    if ds1.kind == "farfield":
        for r1, r2 in zip(ds1.records, ds2.records):
            if abs(r1.kappa - r2.kappa) > 1e-9 or np.max(np.abs(r1.direction - r2.direction)) > 1e-9:
                raise AlignmentError("far-field records are not aligned")
            worst = max(worst, float(np.max(np.abs(r1.values - r2.values) ** 2)))
        return worst
    for r1, r2 in zip(ds1.records, ds2.records):
        if (abs(r1.kappa - r2.kappa) > 1e-9
                or np.max(np.abs(r1.direction - r2.direction)) > 1e-9
                or r1.points.shape != r2.points.shape
                or np.max(np.abs(r1.points - r2.points)) > 1e-9):
            raise AlignmentError("near-field records are not aligned")
        du = r1.dirichlet - r2.dirichlet
        if ds1.dim == 2:
            dn = dtn_circle(du, r1.kappa, r1.radius)
        else:
            dn = r1.neumann - r2.neumann
        term = 2.0 * (r1.kappa**2 * np.sum(r1.weights * np.abs(du) ** 2)
                      + np.sum(r1.weights * np.abs(dn) ** 2))
        worst = max(worst, float(term))
    return worst


# ---------------------------------------------------------------------------
# sweep experiment
# ---------------------------------------------------------------------------

@dataclass
class StabilityRow:
    K: float
    epsilon: float
    recon_error: float
    theoretical_bound: float  # nan when eps is outside the validity range
    crossover: bool
    runtime_s: float


@dataclass
class StabilityReport:
    dim: int
    potential_id: str
    noise_seed: int
    rows: list = field(default_factory=list)

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: r.K)


def node_targets(grid, cutoff):
    """Dual-lattice nodes inside |xi| <= cutoff, one representative per
    conjugate pair (the mirrored node carries the conjugate sample)."""
    dxi = grid.dual_spacing
    m = int(np.floor(cutoff / dxi))
    rng = range(-m, m + 1)
    out = []
    if grid.dim == 2:
        nodes = ((i, j) for i in rng for j in rng)
    else:
        nodes = ((i, j, k) for i in rng for j in rng for k in rng)
    for node in nodes:
        if np.linalg.norm(node) * dxi > cutoff:
            continue
        if node > tuple([0] * grid.dim) or all(c == 0 for c in node):
            out.append(node)
    return out


def generate_far_field_band(potential, band, cfg=SolverConfig(), threads=1):
    """Noiseless scalar far-field dataset on targeted direction pairs.

    For every kappa in the band and every dual-lattice node with
    |xi| <= 2 kappa, one constructive (theta, d) pair is solved; together
    with the conjugate-mirrored nodes this covers the full recovery ball.
    """
    grid = potential.grid
    ds = ScatteringDataset(kind="farfield", dim=grid.dim, radius=potential.support_radius)
    tasks = []
    for kappa in band.grid:
        for node in node_targets(grid, 2.0 * kappa):
            xi = grid.dual_spacing * np.asarray(node, dtype=float)
            pair = direction_pair_for_xi(xi, kappa)
            tasks.append((kappa, pair))
            mirror = direction_pair_for_xi(-xi, kappa)
            tasks.append((kappa, mirror))

    def run(task):
        kappa, pair = task
        res = solve_total_field(potential, None, _wave(kappa, pair.d), cfg)
        return far_field_pattern(res, pair.theta[None, :])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ds.records = list(pool.map(run, tasks))
    else:
        ds.records = [run(t) for t in tasks]
    return ds


def _wave(kappa, d):
    from .forward import PlaneWave

    return PlaneWave(kappa=kappa, direction=np.asarray(d, dtype=float) /
                     np.linalg.norm(d))


def generate_magnetic_band(V, b, band, cfg=SolverConfig(), b_cutoff=None, threads=1,
                           reversal_cutoff=None):
    """Magnetic far-field dataset on targeted direction pairs plus reversals.

    For every kappa in the band and every dual-lattice node with
    |xi| <= min(sqrt(2) kappa, b_cutoff), the two orthogonal-transverse
    pairs and their reversed partners (theta, d) -> (-d, -theta) are solved.
    The reversals let downstream estimators separate the magnetic leading
    term from the electric one; `reversal_cutoff` restricts them to the
    nodes the electric recovery will use (the electric transform is
    negligible beyond it, so the outer b estimates need no pairing).
    """
    from .forward import check_resolution
    from .reconstruct import direction_pairs_for_node

    grid = V.grid
    if b_cutoff is None:
        b_cutoff = np.sqrt(2.0) * band.k_max
    if reversal_cutoff is None:
        reversal_cutoff = b_cutoff
    tasks = []
    for kappa in band.grid:
        check_resolution(kappa, grid)
        limit = min(np.sqrt(2.0) * kappa, b_cutoff)
        for node in node_targets(grid, limit):
            xi = grid.dual_spacing * np.asarray(node, dtype=float)
            for pair in direction_pairs_for_node(xi, kappa):
                tasks.append((kappa, pair))
                if np.linalg.norm(xi) <= reversal_cutoff:
                    tasks.append((kappa, pair.reversed()))

    def run(task):
        kappa, pair = task
        res = solve_total_field(V, b, _wave(kappa, pair.d), cfg)
        return far_field_pattern(res, pair.theta[None, :])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]


def trial_seed(base_seed, k_index, trial):
    """Deterministic per-(K, trial) seed derivation."""
    return np.random.SeedSequence(entropy=(int(base_seed), int(k_index), int(trial))).entropy


def sweep_experiment(true_field, band_list, eta, trials, cfg=SolverConfig(),
                     seed=0, smoothness=1.0, threads=1):
    """Reconstruction-error sweep over increasing band limits.

    For each band: generate noiseless far-field data on [k_min, k_max],
    then per trial add noise, assemble, reconstruct at cutoff 2 k_max, and
    record the mean reconstruction error, the measured data discrepancy, and
    the theoretical bound (when eta puts eps inside its validity range).
    """
    grid = true_field.grid
    exps = stability_exponents(smoothness, grid.dim)
    report = StabilityReport(dim=grid.dim, potential_id="sweep", noise_seed=seed)
    norm_true = l2_norm(true_field) or 1.0  # absolute error for a zero reference
    for k_index, band in enumerate(band_list):
        t0 = time.time()
        from .forward import check_resolution

        check_resolution(band.k_max, grid)
        clean = generate_far_field_band(true_field, band, cfg, threads=threads)
        errors = []
        eps_sq = 0.0
        for trial in range(max(1, trials)):
            noisy = add_noise(clean, eta, seed=trial_seed(seed, k_index, trial))
            eps_sq = max(eps_sq, data_discrepancy(noisy, clean))
            samples = assemble_far_field_samples(noisy.records, grid.dim)
            fld, _ = reconstruct_potential(samples, band.k_max, grid,
                                           true_field.support_radius, min_coverage=0.0)
            errors.append(l2_error(fld, true_field) / norm_true)
        eps = float(np.sqrt(eps_sq))
        try:
            bound = theoretical_bound(band.k_max, eps, exps) if eps > 0 else float("nan")
        except DomainError:
            bound = float("nan")
        cross = eps > 0 and 0 < crossover_k(eps, exps) <= band.k_max if eps < 1 else False
        report.rows.append(StabilityRow(K=band.k_max, epsilon=eps,
                                        recon_error=float(np.mean(errors)),
                                        theoretical_bound=bound, crossover=bool(cross),
                                        runtime_s=time.time() - t0))
    report.rows = report.sorted_rows()
    return report


# ---------------------------------------------------------------------------
# resolvent probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeResult:
    lam: complex
    norm: float        # largest singular value of the cutoff kernel matrix
    hs_norm: float     # Frobenius norm, the scale the kernel estimate bounds
    in_region: bool
    resonance_candidate: bool = False


def _probe_matrix(lam, grid, taper_inner, taper_outer, potential=None):
    """Dense cutoff-kernel matrix rho G rho h^dim on the 2D grid."""
    rad = grid.radius
    with np.errstate(invalid="ignore"):
        taper = 0.5 * (1.0 + np.cos(np.pi * (rad - taper_inner) / (taper_outer - taper_inner)))
    rho = np.where(rad <= taper_inner, 1.0, np.where(rad >= taper_outer, 0.0, taper))
    keep = rho.ravel() > 0
    pts = grid.points[keep]
    rv = rho.ravel()[keep]
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    off = dist > 0
    K = np.zeros(dist.shape, dtype=complex)
    uni, inv = np.unique(np.round(dist[off], 12), return_inverse=True)
    K[off] = np.asarray(green_kernel(2, lam, uni))[inv]
    # singular cell: kernel averaged over the equal-area disc, evaluated
    # through green_kernel so the complex branch matches the off-diagonal
    np.fill_diagonal(K, kernel_disc_average(lam, grid.h / np.sqrt(np.pi)))
    M = (rv[:, None] * K * rv[None, :]) * grid.cell_volume
    if potential is not None:
        vals = potential.values.ravel()[keep]
        A = np.eye(M.shape[0], dtype=complex) + vals[:, None] * M
        sv_min = np.linalg.svd(A, compute_uv=False)[-1]
        M = M @ np.linalg.inv(A)
        return M, sv_min
    return M, None


def _largest_singular_value(M, tol=1e-9, max_iter=400):
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(M.shape[0]) + 1j * rng.standard_normal(M.shape[0])
    x /= np.linalg.norm(x)
    prev = 0.0
    for _ in range(max_iter):
        z = M.conj().T @ (M @ x)
        s = float(np.sqrt(np.linalg.norm(z)))
        x = z / np.linalg.norm(z)
        if abs(s - prev) <= tol * max(s, 1e-300):
            break
        prev = s
    return s


def resolvent_probe(lam, grid, taper_inner, taper_outer, potential=None,
                    region_c0=1.0, resonance_tol=1e-3):
    """Norm estimate of the cutoff 2D resolvent at a sector frequency.

    Assembles rho(x) G(lam, |x-y|) rho(y) h^2 densely (N <= 48) and returns
    its largest singular value together with the Hilbert-Schmidt norm.  A
    nonzero potential is folded in through the finite-dimensional
    second-resolvent surrogate M (I + V M)^{-1}; near-singularity of the
    bracket is reported as a resonance candidate.
    """
    if grid.dim != 2:
        raise DomainError("the resolvent probe is two-dimensional")
    if grid.n > 48:
        raise ValueError("probe grids are limited to N <= 48")
    lam = complex(lam)
    if not in_sector(lam):
        raise DomainError(f"lambda = {lam} outside the admissible sector")
    L = 2.0 * taper_outer
    delta = 1.0 / (4.0 * L)
    in_region = abs(lam) >= region_c0 and lam.imag >= -delta * np.log(1.0 + abs(lam)) - 1e-12
    M, sv_min = _probe_matrix(lam, grid, taper_inner, taper_outer, potential)
    resonance = sv_min is not None and sv_min < resonance_tol
    return ProbeResult(lam=lam, norm=_largest_singular_value(M),
                       hs_norm=float(np.linalg.norm(M)), in_region=bool(in_region),
                       resonance_candidate=bool(resonance))


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def save_report(report, path):
    with open(path, "w") as fh:
        fh.write("K, epsilon, recon_error, theoretical_bound, crossover_flag, runtime_s\n")
        for r in report.sorted_rows():
            fh.write(f"{float(r.K)!r}, {float(r.epsilon)!r}, {float(r.recon_error)!r}, "
                     f"{float(r.theoretical_bound)!r}, {int(r.crossover)}, {r.runtime_s:.3f}\n")


def load_report_rows(path):
    rows = []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            if not line.strip():
                continue
            parts = [t.strip() for t in line.split(",")]
            rows.append(StabilityRow(K=float(parts[0]), epsilon=float(parts[1]),
                                     recon_error=float(parts[2]),
                                     theoretical_bound=float(parts[3]),
                                     crossover=bool(int(parts[4])),
                                     runtime_s=float(parts[5])))
    return rows


def save_probes(probes, path):
    with open(path, "w") as fh:
        fh.write("re_lambda, im_lambda, norm, in_region\n")
        for p in probes:
            fh.write(f"{float(p.lam.real)!r}, {float(p.lam.imag)!r}, {float(p.norm)!r}, {int(p.in_region)}\n")
