"""Grid-sampled potentials, discrete Fourier machinery, norms, and field I/O.

Conventions
-----------
Fourier transform:  Vhat(xi) = int V(x) e^{-i xi.x} dx,  so that
int V e^{i kappa y.(d - theta)} dy = Vhat(kappa (theta - d)).

Grid: the box [-R', R']^dim sampled at x_j = -R' + j h, j = 0..N-1 per
axis (h = 2 R'/N, endpoint excluded).  Dual lattice: xi_m = (pi/R') m in
fft ordering, so xi_m . x_j differs from the plain DFT phase by e^{i pi m}
= (-1)^m per axis.

Fields are immutable by convention; every operation returns new arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np


class ShapeError(ValueError):
    """Operands live on different grids."""


class CoverageError(ValueError):
    """Scattered Fourier samples leave part of the target ball uncovered."""

    def __init__(self, message, uncovered_shells=()):
        super().__init__(message)
        self.uncovered_shells = tuple(uncovered_shells)


@dataclass(frozen=True)
class ClassParams:
    """Smoothness/size class of an admissible potential: (s, Q, R)."""

    smoothness: float
    bound: float
    support_radius: float

    def __post_init__(self):
        for name in ("smoothness", "bound", "support_radius"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.smoothness < 0 or self.bound <= 0 or self.support_radius <= 0:
            raise ValueError("class parameters must be positive (s may be 0)")


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the box [-half_width, half_width]^dim.

    n must be even; spacing h = 2*half_width/n.
    """

    dim: int
    n: int
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_width", float(self.half_width))
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.n <= 0 or self.n % 2 != 0:
            raise ValueError("n must be a positive even integer")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    @property
    def h(self):
        return 2.0 * self.half_width / self.n

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def cell_volume(self):
        return self.h**self.dim

    @property
    def dual_spacing(self):
        return np.pi / self.half_width

    @cached_property
    def axis(self):
        return -self.half_width + self.h * np.arange(self.n)

    @cached_property
    def meshes(self):
        return np.meshgrid(*([self.axis] * self.dim), indexing="ij")

    @cached_property
    def radius(self):
        return np.sqrt(sum(x * x for x in self.meshes))

    @cached_property
    def points(self):
        return np.stack([m.ravel() for m in self.meshes], axis=1)

    @cached_property
    def dual_axis(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @cached_property
    def dual_meshes(self):
        return np.meshgrid(*([self.dual_axis] * self.dim), indexing="ij")

    @cached_property
    def dual_radius(self):
        return np.sqrt(sum(q * q for q in self.dual_meshes))


@dataclass(frozen=True)
class ScalarPotentialField:
    """Real potential sampled on a grid, vanishing outside |x| <= R."""

    grid: Grid
    values: np.ndarray
    class_params: ClassParams

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ShapeError(f"values shape {self.values.shape} != grid {self.grid.shape}")
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=float))

    @property
    def support_radius(self):
        return self.class_params.support_radius

    def support_mask(self):
        return self.grid.radius <= self.support_radius

    def masked(self):
        vals = np.where(self.support_mask(), self.values, 0.0)
        return replace(self, values=vals)


@dataclass(frozen=True)
class VectorPotentialField:
    """Real 3-vector potential on a 3D grid (magnetic coefficient)."""

    grid: Grid
    components: tuple
    class_params: ClassParams
    divergence_free: bool = False

    def __post_init__(self):
        if self.grid.dim != 3:
            raise ShapeError("vector potentials require a 3D grid")
        comps = tuple(np.ascontiguousarray(c, dtype=float) for c in self.components)
        if len(comps) != 3 or any(c.shape != self.grid.shape for c in comps):
            raise ShapeError("need three component arrays matching the grid")
        object.__setattr__(self, "components", comps)

    @property
    def support_radius(self):
        return self.class_params.support_radius

    def magnitude(self):
        return np.sqrt(sum(c * c for c in self.components))

    def masked(self):
        m = self.grid.radius <= self.support_radius
        comps = tuple(np.where(m, c, 0.0) for c in self.components)
        return replace(self, components=comps)


@dataclass(frozen=True)
class FourierSample:
    xi: np.ndarray
    value: complex
    source_kappa: float
    pair_id: int = 0


@dataclass
class FourierSampleSet:
    """Scattered estimates of a Fourier transform at explicit frequencies.

    Every entry must satisfy |xi| <= ball_factor * source_kappa; scalar data
    uses ball_factor=2, magnetic data sqrt(2).
    """

    dim: int
    entries: list = field(default_factory=list)
    ball_factor: float = 2.0
    convention: str = "integral e^{-i xi.x}"

    def add(self, xi, value, source_kappa, pair_id=0):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.dim,):
            raise ShapeError(f"xi must have {self.dim} components")
        if np.linalg.norm(xi) > self.ball_factor * source_kappa + 1e-9 * max(source_kappa, 1.0):
            raise ValueError(
                f"|xi| = {np.linalg.norm(xi):.6g} exceeds "
                f"{self.ball_factor:g} * kappa = {self.ball_factor * source_kappa:.6g}"
            )
        self.entries.append(FourierSample(xi, complex(value), float(source_kappa), int(pair_id)))

    def __len__(self):
        return len(self.entries)

    def binned(self, grid, prefer_largest_kappa=True):
        """Nearest-node binning onto the grid's dual lattice.

        Returns a dict {index tuple: averaged value}.  When several source
        frequencies land on one node and `prefer_largest_kappa`, only entries
        at the maximal kappa there are kept before averaging (their remainder
        is the smallest).
        """
        dxi = grid.dual_spacing
        half = grid.n // 2
        groups = {}
        for e in self.entries:
            idx = np.rint(e.xi / dxi).astype(int)
            if np.any(idx >= half) or np.any(idx < -half):
                continue
            groups.setdefault(tuple(idx), []).append(e)
        out = {}
        for idx, ent in groups.items():
            if prefer_largest_kappa:
                kmax = max(e.source_kappa for e in ent)
                ent = [e for e in ent if e.source_kappa >= kmax - 1e-12 * max(kmax, 1.0)]
            ent = sorted(ent, key=lambda e: e.pair_id)
            out[idx] = sum(e.value for e in ent) / len(ent)
        return out


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def fourier_forward(fld, xi):
    """Trapezoidal quadrature of int V(x) e^{-i xi.x} dx.

    Evaluated through cos/sin so that conj symmetry Vhat(-xi) = conj(Vhat(xi))
    holds exactly for real fields.  `xi` may be a single dim-vector or an
    (m, dim) batch.
    """
    grid, vals = fld.grid, fld.values
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi2 = xi[None, :] if single else xi
    phase = xi2 @ grid.points.T  # (m, n^dim)
    v = vals.ravel()
    re = np.cos(phase) @ v
    im = np.sin(phase) @ v
    out = (re - 1j * im) * grid.cell_volume
    return complex(out[0]) if single else out


def _axis_parity(grid):
    """Per-axis factor (-1)^m accounting for the grid origin at -half_width."""
    m = np.fft.fftfreq(grid.n, d=1.0 / grid.n).astype(int)
    return (-1.0) ** m


def lattice_spectrum(values, grid):
    """Vhat sampled on the full dual lattice (fft ordering), via FFT.

    Matches `fourier_forward` at the lattice nodes to rounding error.
    """
    parity = _axis_parity(grid)
    out = np.fft.fftn(np.asarray(values))
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        out = out * parity.reshape(shape)
    return out * grid.cell_volume


def lattice_field(spectrum, grid):
    """Inverse of `lattice_spectrum`."""
    parity = _axis_parity(grid)
    spec = np.array(spectrum, dtype=complex)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        spec = spec * parity.reshape(shape)
    return np.fft.ifftn(spec) / grid.cell_volume


def inverse_bandlimited(samples, cutoff, grid, support_radius):
    """Band-limited inversion of scattered Fourier samples.

    Bins samples to the nearest dual-lattice node (averaging duplicates),
    zero-fills |xi| > cutoff, applies the inverse lattice transform, takes
    the real part and zeroes values outside |x| <= support_radius.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    binned = samples.binned(grid)
    spec = np.zeros(grid.shape, dtype=complex)
    dxi = grid.dual_spacing
    filled = 0
    for idx, val in binned.items():
        if np.linalg.norm(np.asarray(idx, dtype=float)) * dxi > cutoff:
            continue
        spec[tuple(np.asarray(idx) % grid.n)] = val
        filled += 1
    if filled == 0 and len(samples) > 0:
        shells = coverage_shells(samples, cutoff, grid)
        missing = [f"[{a:.3g}, {b:.3g})" for a, b, frac in shells if frac == 0.0]
        raise CoverageError("no samples fell on the dual lattice within the cutoff ball", missing)
    vals = np.real(lattice_field(spec, grid))
    vals = np.where(grid.radius <= support_radius, vals, 0.0)
    params = ClassParams(smoothness=0.0, bound=max(np.abs(vals).max(), 1e-300), support_radius=support_radius)
    return ScalarPotentialField(grid=grid, values=vals, class_params=params)


def sobolev_norm(fld, s):
    """H^s norm from the dual-lattice spectrum:
    ( sum (1+|xi|^2)^s |Vhat|^2 dxi^dim / (2 pi)^dim )^(1/2).
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    grid = fld.grid
    spec = lattice_spectrum(fld.values, grid)
    weight = (1.0 + grid.dual_radius**2) ** s
    total = np.sum(weight * np.abs(spec) ** 2) * (grid.dual_spacing / (2.0 * np.pi)) ** grid.dim
    return float(np.sqrt(total))


def l2_error(f1, f2):
    """Discrete L2 norm of f1 - f2 restricted to the support ball of f1."""
    if f1.grid != f2.grid:
        raise ShapeError("fields live on different grids")
    mask = f1.grid.radius <= f1.support_radius
    diff = (f1.values - f2.values)[mask]
    return float(np.sqrt(np.sum(diff * diff) * f1.grid.cell_volume))


def l2_norm(fld):
    mask = fld.grid.radius <= fld.support_radius
    return float(np.sqrt(np.sum(fld.values[mask] ** 2) * fld.grid.cell_volume))


def vector_l2_error(b1, b2):
    if b1.grid != b2.grid:
        raise ShapeError("fields live on different grids")
    mask = b1.grid.radius <= b1.support_radius
    num = sum(np.sum((c1 - c2)[mask] ** 2) for c1, c2 in zip(b1.components, b2.components))
    return float(np.sqrt(num * b1.grid.cell_volume))


def vector_l2_norm(b):
    mask = b.grid.radius <= b.support_radius
    return float(np.sqrt(sum(np.sum(c[mask] ** 2) for c in b.components) * b.grid.cell_volume))


def spectral_gradient(values, grid):
    """Gradient by i*xi multiplication on the grid's dual lattice.

    The field is treated as periodic on the box; intended for compactly
    supported samples.
    """
    spec = np.fft.fftn(np.asarray(values, dtype=complex))
    out = []
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        q = grid.dual_axis.reshape(shape)
        out.append(np.fft.ifftn(1j * q * spec))
    return out


def spectral_divergence(components, grid):
    """Divergence by i*xi dot-product on the dual lattice (periodic)."""
    acc = np.zeros(grid.shape, dtype=complex)
    for ax, comp in enumerate(components):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        q = grid.dual_axis.reshape(shape)
        acc += 1j * q * np.fft.fftn(np.asarray(comp, dtype=complex))
    return np.fft.ifftn(acc)


def divergence_free_project(b):
    """Remove the longitudinal part: bhat <- bhat - (xi.bhat) xi/|xi|^2.

    The xi = 0 mode is kept.  The Nyquist planes are zeroed: xi(-m) = -xi(m)
    fails there, so projected spectra would lose Hermitian symmetry and the
    real part would reintroduce divergence.  Output is flagged
    divergence-free; its discrete spectral divergence vanishes to rounding.
    """
    grid = b.grid
    specs = [np.fft.fftn(c) for c in b.components]
    QX = grid.dual_meshes
    q2 = grid.dual_radius**2
    dot = sum(q * s for q, s in zip(QX, specs))
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(q2 > 0, dot / np.where(q2 > 0, q2, 1.0), 0.0)
    nyq = np.zeros(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        idx = [slice(None)] * grid.dim
        idx[ax] = grid.n // 2
        nyq[tuple(idx)] = True
    comps = []
    for s, q in zip(specs, QX):
        proj = s - scale * q
        proj[nyq] = 0.0
        comps.append(np.real(np.fft.ifftn(proj)))
    return VectorPotentialField(
        grid=grid, components=tuple(comps), class_params=b.class_params, divergence_free=True
    )


def coverage_shells(samples, cutoff, grid, n_shells=None):
    """Fraction of dual-lattice nodes hit per radial shell up to the cutoff.

    Returns a list of (r_lo, r_hi, fraction) tuples.
    """
    dxi = grid.dual_spacing
    if n_shells is None:
        n_shells = max(1, int(np.ceil(cutoff / dxi)))
    edges = np.linspace(0.0, cutoff, n_shells + 1)
    hit = set(samples.binned(grid, prefer_largest_kappa=False).keys())
    half = grid.n // 2
    rng = range(-half + 1, half)
    shells = []
    if grid.dim == 2:
        nodes = [(i, j) for i in rng for j in rng]
    else:
        nodes = [(i, j, k) for i in rng for j in rng for k in rng]
    radii = {node: np.linalg.norm(node) * dxi for node in nodes}
    for lo, hi in zip(edges[:-1], edges[1:]):
        shell_nodes = [n for n, r in radii.items() if lo <= r < hi or (hi == cutoff and r == hi)]
        if not shell_nodes:
            continue
        frac = sum(1 for n in shell_nodes if n in hit) / len(shell_nodes)
        shells.append((float(lo), float(hi), float(frac)))
    return shells


# ---------------------------------------------------------------------------
# field file I/O:  header "dim N halfWidth R s Q", then N^dim reals
# row-major (last axis fastest)
# ---------------------------------------------------------------------------

def save_field(fld, path):
    grid, p = fld.grid, fld.class_params
    with open(path, "w") as fh:
        fh.write(f"{grid.dim} {grid.n} {grid.half_width!r} {p.support_radius!r} "
                 f"{p.smoothness!r} {p.bound!r}\n")
        flat = fld.values.ravel()
        for i in range(0, flat.size, 8):
            fh.write(" ".join(repr(float(v)) for v in flat[i:i + 8]) + "\n")


def load_field(path):
    with open(path) as fh:
        header = fh.readline().split()
        dim, n = int(header[0]), int(header[1])
        half_width, support_radius, s, q = (float(t) for t in header[2:6])
        data = np.array(fh.read().split(), dtype=float)
    grid = Grid(dim=dim, n=n, half_width=half_width)
    if data.size != n**dim:
        raise ShapeError(f"expected {n**dim} samples, file holds {data.size}")
    params = ClassParams(smoothness=s, bound=q, support_radius=support_radius)
    return ScalarPotentialField(grid=grid, values=data.reshape(grid.shape), class_params=params)
