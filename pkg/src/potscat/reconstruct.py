"""Fourier-domain estimators: scalar recovery from far/near-field data and
magnetic + electric recovery for the 3D magnetic equation.

Scalar far field: 4 pi A(kappa, theta, d) (3D) or A (2D) estimates
Vhat(kappa (theta - d)); the remainder shrinks as kappa grows, so when
several frequencies cover one frequency node the largest kappa wins.

Scalar near field: with a known reference potential (default zero), the
half-sum of the two boundary identities

    int_B V u1 u2 = int_dB (u1 dn u2 - u2 dn u1)   (+ the swapped pair)

estimates Vhat(-kappa (d1 + d2)).

Magnetic far field: A(kappa, theta, d) ~ -2 kappa d.bhat(kappa (theta - d))
+ O(1).  A single record cannot separate the b term from the electric one,
so direction pairs are generated together with their reversals
(theta, d) -> (-d, -theta); per frequency node the transverse components of
bhat solve a small least-squares system (two orthogonal pairs reduce it to
the diagonal 2x2), and averaging a record with its reversal cancels the
b term in the electric estimate exactly because xi.bhat = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import (
    ClassParams,
    CoverageError,
    FourierSampleSet,
    ScalarPotentialField,
    VectorPotentialField,
    coverage_shells,
    divergence_free_project,
    inverse_bandlimited,
    lattice_field,
    lattice_spectrum,
)


class ConditioningError(RuntimeError):
    """Transverse direction system too close to singular."""


@dataclass(frozen=True)
class DirectionPair:
    """Observation/incidence pair with kappa (theta - d) = xi."""

    theta: np.ndarray
    d: np.ndarray
    kappa: float

    def __post_init__(self):
        for v in (self.theta, self.d):
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError("theta and d must be unit vectors")

    @property
    def xi(self):
        return self.kappa * (self.theta - self.d)

    def reversed(self):
        return DirectionPair(theta=-self.d, d=-self.theta, kappa=self.kappa)


@dataclass(frozen=True)
class IncidentPair:
    """Two incident directions with -kappa (d1 + d2) = xi.

    With angle_constraint the opening angle is at least pi/2 (d1.d2 <= 0),
    which holds exactly when |xi| <= sqrt(2) kappa.
    """

    d1: np.ndarray
    d2: np.ndarray
    kappa: float
    angle_constraint: bool = False

    def __post_init__(self):
        for v in (self.d1, self.d2):
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError("d1 and d2 must be unit vectors")
        if self.angle_constraint and float(np.dot(self.d1, self.d2)) > 1e-12:
            raise ValueError("angle constraint requires d1.d2 <= 0")

    @property
    def xi(self):
        return -self.kappa * (self.d1 + self.d2)


def _unit_orthogonal(e):
    """Deterministic unit vector orthogonal to e."""
    e = np.asarray(e, dtype=float)
    if len(e) == 2:
        v = np.array([-e[1], e[0]])
        return v / np.linalg.norm(v)
    k = int(np.argmin(np.abs(e)))
    a = np.zeros(3)
    a[k] = 1.0
    v = np.cross(e, a)
    return v / np.linalg.norm(v)


def direction_pair_for_xi(xi, kappa):
    """Constructive (theta, d) with kappa (theta - d) = xi, |xi| <= 2 kappa."""
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi)
    if norm > 2.0 * kappa * (1.0 + 1e-12):
        raise ValueError(f"|xi| = {norm:.6g} exceeds 2 kappa = {2 * kappa:.6g}")
    if norm == 0.0:
        v = np.zeros(len(xi))
        v[-1] = 1.0
        return DirectionPair(theta=v, d=v.copy(), kappa=float(kappa))
    e = xi / norm
    t = min(norm / (2.0 * kappa), 1.0)
    v = _unit_orthogonal(e)
    root = np.sqrt(max(0.0, 1.0 - t * t))
    theta = t * e + root * v
    d = -t * e + root * v
    return DirectionPair(theta=theta, d=d, kappa=float(kappa))


def transverse_frame(xi):
    """Orthonormal (v, vt) spanning the plane orthogonal to xi (3D)."""
    e = np.asarray(xi, dtype=float)
    e = e / np.linalg.norm(e)
    v = _unit_orthogonal(e)
    vt = np.cross(e, v)
    return v, vt


def direction_pairs_for_node(xi, kappa):
    """The two orthogonal-transverse pairs used for magnetic recovery (3D)."""
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi)
    if norm == 0.0:
        d = np.array([1.0, 0.0, 0.0])
        return [DirectionPair(theta=d, d=d.copy(), kappa=float(kappa))]
    v, vt = transverse_frame(xi)
    e = xi / norm
    t = norm / (2.0 * kappa)
    root = np.sqrt(max(0.0, 1.0 - t * t))
    out = []
    for w in (v, vt):
        out.append(DirectionPair(theta=t * e + root * w, d=-t * e + root * w, kappa=float(kappa)))
    return out


def incident_pair_for_xi(xi, kappa, enforce_angle=False):
    """Constructive (d1, d2) with -kappa (d1 + d2) = xi."""
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi)
    limit = (np.sqrt(2.0) if enforce_angle else 2.0) * kappa
    if norm > limit * (1.0 + 1e-12):
        raise ValueError(f"|xi| = {norm:.6g} exceeds {limit:.6g}")
    if norm == 0.0:
        v = np.zeros(len(xi))
        v[-1] = 1.0
        return IncidentPair(d1=v, d2=-v, kappa=float(kappa), angle_constraint=enforce_angle)
    e = -xi / norm
    t = norm / (2.0 * kappa)
    v = _unit_orthogonal(e)
    root = np.sqrt(max(0.0, 1.0 - t * t))
    return IncidentPair(d1=t * e + root * v, d2=t * e - root * v, kappa=float(kappa),
                        angle_constraint=enforce_angle)


# ---------------------------------------------------------------------------
# scalar estimators
# ---------------------------------------------------------------------------

def assemble_far_field_samples(records, dim):
    """Far-field records -> FourierSampleSet of Vhat estimates.

    Each (kappa, theta, d, A) contributes xi = kappa (theta - d) with value
    4 pi A in 3D and A in 2D.
    """
    samples = FourierSampleSet(dim=dim, ball_factor=2.0)
    scale = 4.0 * np.pi if dim == 3 else 1.0
    pair_id = 0
    for rec in records:
        if getattr(rec, "magnetic", False):
            raise ValueError("magnetic records cannot feed the scalar assembly")
        for theta, val in zip(rec.thetas, rec.values):
            xi = rec.kappa * (theta - rec.direction)
            samples.add(xi, scale * val, rec.kappa, pair_id=pair_id)
            pair_id += 1
    return samples


def _free_trace(kappa, direction, points, radius):
    """Dirichlet/Neumann traces of the incident plane wave on |x| = R."""
    phase = points @ np.asarray(direction, dtype=float)
    u = np.exp(1j * kappa * phase)
    nu_dot_d = phase / radius
    return u, 1j * kappa * nu_dot_d * u


def _total_traces(dataset, kappa, direction, points, radius):
    """Total-field traces: incident plus scattered from the dataset; the
    all-zero reference (dataset None) is the free field."""
    u_inc, du_inc = _free_trace(kappa, direction, points, radius)
    if dataset is None:
        return u_inc, du_inc
    rec = dataset.find_near(kappa, direction)
    if rec.points.shape != points.shape or np.max(np.abs(rec.points - points)) > 1e-9:
        raise ValueError("near-field record sampled on different boundary points")
    return u_inc + rec.dirichlet, du_inc + rec.neumann


def near_field_fourier_estimate(data_reference, data_unknown, pair):
    """Estimate Vhat(-kappa (d1 + d2)) for V = V_unknown - V_reference.

    Evaluates the boundary integrals int (u1 dn u2 - u2 dn u1) ds for the
    (d1, d2) fields and their swapped counterparts, by the quadrature rule
    carried by the records, and returns half their sum.
    """
    kappa = pair.kappa
    ref_rec = data_unknown.records[0]
    points, weights, radius = ref_rec.points, ref_rec.weights, ref_rec.radius
    total = 0.0 + 0.0j
    for da, db in ((pair.d1, pair.d2), (pair.d2, pair.d1)):
        u1, du1 = _total_traces(data_reference, kappa, da, points, radius)
        u2, du2 = _total_traces(data_unknown, kappa, db, points, radius)
        total += np.sum(weights * (u1 * du2 - u2 * du1))
    return 0.5 * total


def reconstruct_potential(samples, K, grid, support_radius, min_coverage=0.9):
    """Band-limited inversion at cutoff 2K with a coverage report.

    Returns (field, report); raises CoverageError when the covered node
    fraction within the cutoff ball falls below `min_coverage`.
    """
    cutoff = 2.0 * float(K)
    shells = coverage_shells(samples, cutoff, grid)
    covered = [f for *_, f in shells]
    fraction = float(np.mean(covered)) if covered else 0.0
    report = CoverageReport(cutoff=cutoff, shells=shells, fraction=fraction)
    if fraction < min_coverage:
        bad = [f"[{a:.3g}, {b:.3g}): {f:.0%}" for a, b, f in shells if f < min_coverage]
        raise CoverageError(
            f"coverage {fraction:.0%} below threshold {min_coverage:.0%}", bad)
    fld = inverse_bandlimited(samples, cutoff, grid, support_radius)
    return fld, report


@dataclass(frozen=True)
class CoverageReport:
    cutoff: float
    shells: list
    fraction: float

    def render(self):
        lines = [f"coverage report: cutoff {self.cutoff:.6g}, "
                 f"covered node fraction {self.fraction:.1%}"]
        for lo, hi, frac in self.shells:
            lines.append(f"  shell [{lo:8.4g}, {hi:8.4g}): {frac:7.1%}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# magnetic recovery
# ---------------------------------------------------------------------------

@dataclass
class MagneticRecovery:
    """Recovered magnetic potential plus its lattice spectrum.

    `spectrum` maps dual-lattice index tuples to projected bhat values,
    satisfying xi . bhat = 0 to rounding error.
    """

    field: VectorPotentialField
    spectrum: dict
    kappa_used: dict = field(default_factory=dict)


def _node_key(xi, grid):
    return tuple(int(i) for i in np.rint(np.asarray(xi) / grid.dual_spacing))


def recover_magnetic(records, grid, support_radius, cutoff=None, cond_tol=1e-6):
    """Recover a divergence-free b from magnetic far-field records.

    Per record, d.bhat(kappa (theta - d)) ~ -A/(2 kappa); since xi.bhat = 0
    only the transverse part of d contributes.  Records landing on one
    dual-lattice node (largest kappa preferred) form a least-squares system
    for the two transverse components; with the two orthogonal construction
    pairs this is the diagonal 2x2 system, and when reversed pairs are
    present the electric contribution cancels from the estimates.
    """
    if grid.dim != 3:
        raise ValueError("magnetic recovery requires dim = 3")
    by_node = {}
    for rec in records:
        if not getattr(rec, "magnetic", True):
            raise ValueError("scalar far-field records cannot feed magnetic recovery")
        for theta, val in zip(rec.thetas, rec.values):
            xi = rec.kappa * (theta - rec.direction)
            key = _node_key(xi, grid)
            by_node.setdefault(key, []).append((rec.kappa, np.asarray(rec.direction, float), complex(val)))

    dxi = grid.dual_spacing
    if cutoff is None:
        cutoff = np.sqrt(2.0) * max(k for k, _, _ in
                                    (item for items in by_node.values() for item in items))
    spectrum = {}
    kappa_used = {}
    for key, items in sorted(by_node.items()):
        xi = dxi * np.asarray(key, dtype=float)
        norm = np.linalg.norm(xi)
        if norm > cutoff:
            continue
        kmax = max(k for k, _, _ in items)
        items = [it for it in items if it[0] >= kmax * (1.0 - 1e-12)]
        if norm == 0.0:
            spectrum[key] = np.zeros(3, dtype=complex)
            kappa_used[key] = kmax
            continue
        v, vt = transverse_frame(xi)
        rows, rhs = [], []
        for kappa, d, val in items:
            rows.append([float(d @ v), float(d @ vt)])
            rhs.append(-val / (2.0 * kappa))
        A = np.asarray(rows, dtype=float)
        y = np.asarray(rhs, dtype=complex)
        gram = A.T @ A
        sv = np.linalg.svd(gram, compute_uv=False)
        if sv[-1] < cond_tol * sv[0]:
            raise ConditioningError(
                f"transverse directions nearly parallel at node {key} "
                f"(singular values {sv[0]:.3e}, {sv[-1]:.3e})")
        coef = np.linalg.solve(gram, A.T @ y)
        spectrum[key] = coef[0] * v + coef[1] * vt
        kappa_used[key] = kmax

    # real fields have Hermitian spectra: complete nodes whose mirror was
    # not measured (targeted datasets solve one node per conjugate pair)
    for key in list(spectrum):
        mirror = tuple(-k for k in key)
        if mirror not in spectrum:
            spectrum[mirror] = np.conj(spectrum[key])
            kappa_used[mirror] = kappa_used[key]

    # fill the lattice, project, invert
    comps_spec = [np.zeros(grid.shape, dtype=complex) for _ in range(3)]
    for key, bh in spectrum.items():
        idx = tuple(np.asarray(key) % grid.n)
        for c in range(3):
            comps_spec[c][idx] = bh[c]
    comps = tuple(np.real(lattice_field(s, grid)) for s in comps_spec)
    params = ClassParams(smoothness=1.0, bound=1.0, support_radius=support_radius)
    raw = VectorPotentialField(grid=grid, components=comps, class_params=params)
    projected = divergence_free_project(raw)
    masked_comps = tuple(np.where(grid.radius <= support_radius, c, 0.0)
                         for c in projected.components)
    fld = VectorPotentialField(grid=grid, components=masked_comps,
                               class_params=params, divergence_free=True)

    # re-project the stored spectrum so xi . bhat vanishes identically
    for key in spectrum:
        xi = dxi * np.asarray(key, dtype=float)
        norm2 = float(xi @ xi)
        if norm2 > 0:
            bh = spectrum[key]
            spectrum[key] = bh - (xi @ bh) * xi / norm2
    return MagneticRecovery(field=fld, spectrum=spectrum, kappa_used=kappa_used)


def recover_electric(records, recovery, grid, K, support_radius):
    """Electric potential from magnetic far-field data, after b recovery.

    Per record the recovered leading term -2 kappa d.bhat_rec is subtracted;
    the residual is read as -(|b|^2 + V)-hat, negated, corrected by the
    transform of |b_rec|^2, band-limited at 2K and inverted.  Averaging a
    record with its reversed partner cancels the b term exactly since the
    projected bhat_rec is orthogonal to xi.
    """
    cutoff = 2.0 * float(K)
    dxi = grid.dual_spacing
    residuals = {}
    for rec in records:
        for theta, val in zip(rec.thetas, rec.values):
            xi = rec.kappa * (theta - rec.direction)
            key = _node_key(xi, grid)
            if np.linalg.norm(np.asarray(key)) * dxi > cutoff:
                continue
            bh = recovery.spectrum.get(key)
            if bh is None:
                continue
            lead = -2.0 * rec.kappa * complex(np.asarray(rec.direction, float) @ bh)
            residuals.setdefault(key, []).append(complex(val) - lead)

    # Hermitian completion for targeted half-lattice datasets
    for key in list(residuals):
        mirror = tuple(-k for k in key)
        if mirror not in residuals:
            residuals[mirror] = [np.conj(v) for v in residuals[key]]

    b2 = sum(c * c for c in recovery.field.components)
    b2_spec = lattice_spectrum(b2, grid)
    spec = np.zeros(grid.shape, dtype=complex)
    for key, vals in residuals.items():
        vt_hat = -np.mean(vals)  # residual ~ -(|b|^2 + V)-hat
        idx = tuple(np.asarray(key) % grid.n)
        spec[idx] = vt_hat - b2_spec[idx]
    vals = np.real(lattice_field(spec, grid))
    vals = np.where(grid.radius <= support_radius, vals, 0.0)
    params = ClassParams(smoothness=1.0, bound=max(float(np.abs(vals).max()), 1e-300),
                         support_radius=support_radius)
    return ScalarPotentialField(grid=grid, values=vals, class_params=params)


# ---------------------------------------------------------------------------
# sample-set CSV: "xi components..., re, im, kappa, pair id"
# ---------------------------------------------------------------------------

def save_samples(samples, path):
    with open(path, "w") as fh:
        for e in samples.entries:
            cols = [repr(float(c)) for c in e.xi]
            cols += [repr(e.value.real), repr(e.value.imag), repr(e.source_kappa), str(e.pair_id)]
            fh.write(", ".join(cols) + "\n")


def load_samples(path, dim, ball_factor=2.0):
    samples = FourierSampleSet(dim=dim, ball_factor=ball_factor)
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            parts = [t.strip() for t in line.split(",")]
            xi = np.array([float(t) for t in parts[:dim]])
            val = float(parts[dim]) + 1j * float(parts[dim + 1])
            kappa = float(parts[dim + 2])
            pair_id = int(parts[dim + 3])
            samples.add(xi, val, kappa, pair_id)
    return samples
