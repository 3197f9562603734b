"""Forward scattering: volume-integral solver, far fields, boundary traces.

Solver
------
Total field u solves  u + G_k * (W u) = e^{i kappa x.d}  on the grid, with
W u = V u for the classical equation and
W u = -2i b.grad(u) + (|b|^2 + V - i div b) u for the magnetic one (the
div term is retained so non-gauge-fixed inputs are handled; it vanishes
for divergence-free b).

G_k is convolution with the radially truncated outgoing kernel, evaluated
by FFT on a torus of side torus_factor * box side.  The kernel truncation
radius equals half the torus side; with the linear system restricted to
grid points in a ball slightly larger than the support, wrap-around images
then never couple points of the system for any torus_factor >= 2.

The truncated-kernel symbols are closed forms:
  3D: ghat(rho) = int_0^D e^{i k r} sin(rho r)/rho dr
  2D: ghat(rho) = (i pi/2) [ D(-k H1(kD) J0(rho D) + rho H0(kD) J1(rho D)) - 2i/pi ]
                  / (rho^2 - k^2)
with the removable singularities at rho = 0 and rho = k filled by their limits.

The classical case iterates on u directly; the magnetic case iterates on
the source density psi = W u (the gradient of u is then recovered from
grad(G * psi), which a u-iteration could not provide on a non-periodic box).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.sparse.linalg import LinearOperator, gmres

from .fields import Grid, ShapeError, fourier_forward, spectral_divergence

MAX_RESOLVED_PHASE = np.pi / 4  # require kappa * h <= pi/4 (>= 8 points per wavelength)


class ResolutionError(ValueError):
    """Grid too coarse for the requested frequency."""


class SolverConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (final relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class PlaneWave:
    """Incident plane wave e^{i kappa x.d}."""

    kappa: float
    direction: np.ndarray

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector (|d| = 1 to 1e-12)")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class SolverConfig:
    krylov_tol: float = 1e-8
    max_iterations: int = 2000
    torus_factor: int = 2
    quadrature: str = "trapezoid"

    def __post_init__(self):
        if not 0.0 < self.krylov_tol < 1.0:
            raise ValueError("krylov_tol must lie in (0, 1)")
        if self.torus_factor < 2:
            raise ValueError("torus_factor must be at least 2")
        if self.quadrature != "trapezoid":
            raise ValueError("only the trapezoid rule is implemented")


def check_resolution(kappa, grid):
    if kappa * grid.h > MAX_RESOLVED_PHASE + 1e-12:
        raise ResolutionError(
            f"kappa*h = {kappa * grid.h:.4g} exceeds pi/4 = {MAX_RESOLVED_PHASE:.4g}; "
            f"refine the grid or lower the frequency"
        )


def _sinc(x):
    return np.sinc(x / np.pi)


def truncated_kernel_symbol(dim, kappa, rho, trunc):
    """Fourier transform of the outgoing kernel truncated at radius `trunc`."""
    rho = np.asarray(rho, dtype=float)
    D = float(trunc)
    k = float(kappa)
    if dim == 3:
        def phi(a):
            return D * np.exp(0.5j * a * D) * _sinc(0.5 * a * D)

        out = np.empty(rho.shape, dtype=complex)
        zero = rho < 1e-12
        nz = ~zero
        out[nz] = (phi(k + rho[nz]) - phi(k - rho[nz])) / (2j * rho[nz])
        out[zero] = (D * np.exp(1j * k * D) - phi(k)) / (1j * k)
        return out
    if dim == 2:
        z = k * D
        H0, H1 = special.hankel1(0, z), special.hankel1(1, z)
        J0d = special.j0(rho * D)
        J1d = special.j1(rho * D)
        num = D * (-k * H1 * J0d + rho * H0 * J1d) - 2j / np.pi
        den = rho**2 - k**2
        out = np.empty(rho.shape, dtype=complex)
        zero = rho < 1e-12
        near = (np.abs(den) < 1e-7 * k**2) & ~zero
        ok = ~(near | zero)
        out[ok] = (0.5j * np.pi) * num[ok] / den[ok]
        out[near] = (0.5j * np.pi) * 0.5 * D**2 * (H0 * special.j0(z) + H1 * special.j1(z))
        out[zero] = (0.5j * np.pi) * ((D / k) * H1 + 2j / (np.pi * k**2))
        return out
    raise ValueError("dim must be 2 or 3")


_CONVOLVER_CACHE = {}
_CONVOLVER_CACHE_MAX = 6


def get_convolver(grid, kappa, cfg, rows_radius):
    """Cached KernelConvolver; symbols are reused across solves at one
    (grid, frequency, geometry)."""
    key = (grid, float(kappa), cfg.torus_factor, round(float(rows_radius), 12))
    conv = _CONVOLVER_CACHE.get(key)
    if conv is None:
        conv = KernelConvolver(grid, kappa, cfg, rows_radius)
        if len(_CONVOLVER_CACHE) >= _CONVOLVER_CACHE_MAX:
            _CONVOLVER_CACHE.pop(next(iter(_CONVOLVER_CACHE)))
        _CONVOLVER_CACHE[key] = conv
    return conv


class KernelConvolver:
    """FFT convolution with the truncated outgoing kernel on a padded torus.

    Precomputes the symbol (and its gradient symbols) once per (grid, kappa).
    `rows_radius` is the radius of the ball on which the convolution output
    is trusted; the no-alias condition torus side > 2*(rows radius + support
    radius bound) is asserted at construction.
    """

    def __init__(self, grid, kappa, cfg, rows_radius):
        self.grid, self.kappa = grid, float(kappa)
        factor = cfg.torus_factor
        side = 2.0 * grid.half_width
        # images sit at least (torus - 2*rows_radius) away; the truncation at
        # half the torus side must also cover every true pair distance
        while factor * side <= 4.0 * rows_radius + 4.0 * grid.h:
            factor += 1
        self.torus_factor = factor
        self.nt = factor * grid.n
        self.trunc = 0.5 * factor * side
        axis = 2.0 * np.pi * np.fft.fftfreq(self.nt, d=grid.h)
        meshes = np.meshgrid(*([axis] * grid.dim), indexing="ij")
        rho = np.sqrt(sum(q * q for q in meshes))
        self.symbol = truncated_kernel_symbol(grid.dim, kappa, rho, self.trunc)
        self._grad_meshes = meshes

    def apply(self, f, grad=False):
        """(G * f) on the box grid; optionally also its gradient."""
        grid = self.grid
        pad = np.zeros((self.nt,) * grid.dim, dtype=complex)
        box = (slice(0, grid.n),) * grid.dim
        pad[box] = f
        fh = np.fft.fftn(pad)
        conv = np.fft.ifftn(fh * self.symbol)[box]
        if not grad:
            return conv
        grads = [np.fft.ifftn(fh * (1j * q * self.symbol))[box] for q in self._grad_meshes]
        return conv, grads

    def circulant_kernel(self):
        """Real-space circular-convolution kernel (for the dense oracle)."""
        return np.fft.ifftn(self.symbol)


@dataclass
class SolveResult:
    """Total field on the grid plus the data needed downstream.

    `source_density` is psi = W u (supported in the interaction ball); the
    scattered field is everywhere u^s = -(G * psi).  `gradient` is grad(u)
    (populated for magnetic solves).
    """

    grid: Grid
    kappa: float
    direction: np.ndarray
    u: np.ndarray
    incident: np.ndarray
    source_density: np.ndarray
    support_radius: float
    gradient: list | None = None
    iterations: int = 0
    residual: float = 0.0
    magnetic: bool = False
    warnings: list = field(default_factory=list)

    @property
    def scattered(self):
        return self.u - self.incident


def _incident(grid, wave):
    phase = sum(d * x for d, x in zip(wave.direction, grid.meshes))
    return np.exp(1j * wave.kappa * phase)


def _rows_mask(grid, support_radius):
    return grid.radius <= support_radius + 2.0 * grid.h


def _run_gmres(op, rhs, cfg):
    count = [0]

    def cb(_):
        count[0] += 1

    restart = 50
    maxiter = max(1, int(np.ceil(cfg.max_iterations / restart)))
    sol, info = gmres(op, rhs, rtol=cfg.krylov_tol, atol=0.0, restart=restart,
                      maxiter=maxiter, callback=cb, callback_type="pr_norm")
    return sol, info, count[0]


def solve_total_field(V, b, wave, cfg=SolverConfig()):
    """Solve the Lippmann-Schwinger system for the total field.

    Parameters
    ----------
    V : ScalarPotentialField
        Electric potential (may be identically zero).
    b : VectorPotentialField or None
        Magnetic potential; requires dim = 3.
    wave : PlaneWave
    cfg : SolverConfig

    Returns
    -------
    SolveResult
    """
    grid = V.grid
    check_resolution(wave.kappa, grid)
    if len(wave.direction) != grid.dim:
        raise ShapeError("incident direction dimension does not match the grid")
    support = V.support_radius
    if b is not None:
        if b.grid != grid:
            raise ShapeError("V and b live on different grids")
        support = max(support, b.support_radius)
    if support + 2.0 * grid.h >= grid.half_width:
        raise ResolutionError("support ball must sit strictly inside the box")

    conv = get_convolver(grid, wave.kappa, cfg, rows_radius=support + 2.0 * grid.h)
    uinc = _incident(grid, wave)
    mask = _rows_mask(grid, support)

    if b is None:
        return _solve_classical(V, wave, cfg, conv, uinc, mask)
    return _solve_magnetic(V, b, wave, cfg, conv, uinc, mask)


def _solve_classical(V, wave, cfg, conv, uinc, mask):
    grid = V.grid
    vals = np.where(mask, V.values, 0.0)
    shape = grid.shape

    def apply(u):
        u = np.where(mask, u.reshape(shape), 0.0)
        return (u + np.where(mask, conv.apply(vals * u), 0.0)).ravel()

    n = uinc.size
    op = LinearOperator((n, n), matvec=apply, dtype=complex)
    rhs = np.where(mask, uinc, 0.0).ravel()
    sol, info, iters = _run_gmres(op, rhs, cfg)
    resid = float(np.linalg.norm(apply(sol) - rhs) / np.linalg.norm(rhs))
    if info != 0:
        raise SolverConvergenceError("classical solve did not converge", resid)
    u_ball = np.where(mask, sol.reshape(shape), 0.0)
    psi = vals * u_ball
    u_full = uinc - conv.apply(psi)
    return SolveResult(grid=grid, kappa=wave.kappa, direction=wave.direction, u=u_full,
                       incident=uinc, source_density=psi, support_radius=V.support_radius,
                       iterations=iters, residual=resid)


def _solve_magnetic(V, b, wave, cfg, conv, uinc, mask):
    grid = V.grid
    kappa = wave.kappa
    comps = [np.where(mask, c, 0.0) for c in b.components]
    b2 = sum(c * c for c in comps)
    div = np.real(spectral_divergence(comps, grid))
    q = b2 + np.where(mask, V.values, 0.0) - 1j * div
    ginc = [1j * kappa * d * uinc for d in wave.direction]
    shape = grid.shape

    def W(u, gu):
        return -2j * sum(c * g for c, g in zip(comps, gu)) + q * u

    rhs = np.where(mask, W(uinc, ginc), 0.0)

    def apply(psi):
        psi = np.where(mask, psi.reshape(shape), 0.0)
        w, gw = conv.apply(psi, grad=True)
        return (psi + np.where(mask, W(w, gw), 0.0)).ravel()

    n = uinc.size
    op = LinearOperator((n, n), matvec=apply, dtype=complex)
    sol, info, iters = _run_gmres(op, rhs.ravel(), cfg)
    resid = float(np.linalg.norm(apply(sol) - rhs.ravel()) / np.linalg.norm(rhs))
    notes = []
    if info != 0:
        raise SolverConvergenceError(
            "magnetic solve did not converge; the magnetic potential may be too large",
            resid,
        )
    psi = np.where(mask, sol.reshape(shape), 0.0)
    w, gw = conv.apply(psi, grad=True)
    u_full = uinc - w
    grad_full = [g - h for g, h in zip(ginc, gw)]
    norm_ratio = float(np.linalg.norm(psi) / max(np.linalg.norm(rhs), 1e-300))
    if norm_ratio > 5.0:
        notes.append(f"weak-contraction warning: |psi|/|W u_inc| = {norm_ratio:.2f}")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    support = max(V.support_radius, b.support_radius)
    return SolveResult(grid=grid, kappa=kappa, direction=wave.direction, u=u_full,
                       incident=uinc, source_density=psi, support_radius=support,
                       gradient=grad_full, iterations=iters, residual=resid,
                       magnetic=True, warnings=notes)


def dense_system_matrix(V, wave, cfg=SolverConfig()):
    """Materialize the classical system restricted to the interaction ball.

    Same discretization as the iterative path: A = I + C diag(V) with C the
    circular-convolution kernel of the truncated symbol.  Returns
    (A, indices, uinc_ball) with `indices` the flat grid indices of the ball.
    Intended for small grids (oracle use).
    """
    grid = V.grid
    check_resolution(wave.kappa, grid)
    support = V.support_radius
    conv = KernelConvolver(grid, wave.kappa, cfg, rows_radius=support + 2.0 * grid.h)
    mask = _rows_mask(grid, support)
    idx = np.flatnonzero(mask.ravel())
    if idx.size > 6000:
        raise MemoryError("dense oracle limited to small grids")
    coords = np.argwhere(mask)
    kernel = conv.circulant_kernel()
    diff = (coords[:, None, :] - coords[None, :, :]) % conv.nt
    C = kernel[tuple(diff[..., ax] for ax in range(grid.dim))]
    A = C * V.values[mask][None, :]
    A[np.diag_indices_from(A)] += 1.0
    uinc = _incident(grid, wave)
    return A, idx, uinc.ravel()[idx]


# ---------------------------------------------------------------------------
# far field and boundary traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FarFieldRecord:
    kappa: float
    direction: np.ndarray
    thetas: np.ndarray  # (m, dim)
    values: np.ndarray  # (m,)
    magnetic: bool = False


@dataclass(frozen=True)
class NearFieldRecord:
    kappa: float
    direction: np.ndarray
    points: np.ndarray      # (M, dim) on |x| = R
    weights: np.ndarray     # (M,) quadrature weights for the sphere/circle
    dirichlet: np.ndarray   # scattered trace u^s
    neumann: np.ndarray     # scattered normal derivative
    radius: float

    def __post_init__(self):
        r = np.linalg.norm(self.points, axis=1)
        if np.max(np.abs(r - self.radius)) > 1e-12 * max(1.0, self.radius):
            raise ValueError("boundary points must lie on |x| = R to 1e-12")


def far_field_pattern(result, thetas):
    """Far-field pattern at the observation directions.

    Classical 3D: (1/(4 pi)) int e^{-i k theta.y} V u dy; classical 2D drops
    the prefactor; magnetic: int e^{-i k theta.y} (2i b.grad u - (|b|^2 + V
    - i div b) u) dy.  All are quadratures of psi = W u over the support box.
    """
    grid = result.grid
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    phases = thetas @ grid.points.T
    vals = (np.exp(-1j * result.kappa * phases) @ result.source_density.ravel()) * grid.cell_volume
    if result.magnetic:
        vals = -vals
    elif grid.dim == 3:
        vals = vals / (4.0 * np.pi)
    return FarFieldRecord(kappa=result.kappa, direction=result.direction,
                          thetas=thetas, values=vals, magnetic=result.magnetic)


def born_oracle(V, kappa, theta, d):
    """Linearized far field: Vhat(kappa (theta - d)), with the 3D 1/(4 pi)."""
    xi = kappa * (np.asarray(theta, float) - np.asarray(d, float))
    val = fourier_forward(V, xi)
    return val / (4.0 * np.pi) if V.grid.dim == 3 else val


def circle_rule(kappa, radius, min_points=64):
    """Uniform angular quadrature on the circle |x| = R (trapezoid, spectral)."""
    m = max(min_points, 8 * int(np.ceil(kappa * radius)))
    phi = 2.0 * np.pi * np.arange(m) / m
    pts = radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    w = np.full(m, 2.0 * np.pi * radius / m)
    return pts, w


def sphere_rule(kappa, radius, min_points=64):
    """Gauss-Legendre (polar) x uniform (azimuth) rule on the sphere |x| = R.

    Degree covers the product bandwidth ~ 2 kappa R of trace integrands.
    """
    L = 2 * int(np.ceil(kappa * radius)) + 16
    n_pol = L + 1
    n_az = 2 * L + 2
    if n_pol * n_az < min_points:
        n_pol = int(np.ceil(np.sqrt(min_points / 2)))
        n_az = 2 * n_pol
    x, w = np.polynomial.legendre.leggauss(n_pol)
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    st = np.sqrt(1.0 - x**2)
    pts = np.stack([
        (st[:, None] * np.cos(phi)[None, :]).ravel(),
        (st[:, None] * np.sin(phi)[None, :]).ravel(),
        (x[:, None] * np.ones_like(phi)[None, :]).ravel(),
    ], axis=1)
    weights = (w[:, None] * (2.0 * np.pi / n_az) * np.ones(n_az)[None, :]).ravel() * radius**2
    return radius * pts, weights


def boundary_rule(dim, kappa, radius, min_points=64):
    return circle_rule(kappa, radius, min_points) if dim == 2 else sphere_rule(kappa, radius, min_points)


def near_field_trace(result, radius=None, points=None, weights=None):
    """Dirichlet and Neumann traces of the scattered field on |x| = R.

    Both are quadratures of the volume representation u^s = -(G * psi):
    the Dirichlet trace sums the kernel, the Neumann trace the normal
    component of its analytic gradient.
    """
    from .specialfn import green_kernel, green_kernel_gradient

    grid = result.grid
    R = result.support_radius if radius is None else float(radius)
    if points is None:
        points, weights = boundary_rule(grid.dim, result.kappa, R)
    else:
        points = np.asarray(points, dtype=float)
        if weights is None:
            raise ValueError("explicit boundary points require explicit weights")
        weights = np.asarray(weights, dtype=float)
    r_pts = np.linalg.norm(points, axis=1)
    if np.max(np.abs(r_pts - R)) > 1e-12 * max(1.0, R):
        raise ValueError("boundary points must lie on the measurement sphere")
    m_min = 8 * int(np.ceil(result.kappa * R))
    if len(points) < max(8, m_min):
        raise ValueError(f"need at least {m_min} boundary points at kappa R = {result.kappa * R:.3g}")

    psi = result.source_density.ravel()
    sel = np.abs(psi) > 0
    psi_s = psi[sel]
    Y = grid.points[sel]
    w_vol = grid.cell_volume
    diff = points[:, None, :] - Y[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    ker = green_kernel(grid.dim, result.kappa, dist)
    dirichlet = -(ker @ psi_s) * w_vol
    nu = points / R
    grad = green_kernel_gradient(grid.dim, result.kappa, points[:, None, :], Y[None, :, :])
    normal = np.sum(grad * nu[:, None, :], axis=2)
    neumann = -(normal @ psi_s) * w_vol
    return NearFieldRecord(kappa=result.kappa, direction=result.direction, points=points,
                           weights=weights, dirichlet=dirichlet, neumann=neumann, radius=R)


def scattered_interior(result, points):
    """Scattered field at arbitrary interior points via the representation."""
    from .specialfn import green_kernel

    grid = result.grid
    points = np.atleast_2d(np.asarray(points, dtype=float))
    psi = result.source_density.ravel()
    sel = np.abs(psi) > 0
    Y = grid.points[sel]
    diff = points[:, None, :] - Y[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    ker = green_kernel(grid.dim, result.kappa, dist)
    return -(ker @ psi[sel]) * grid.cell_volume


def dtn_circle(dirichlet, kappa, radius):
    """Dirichlet-to-Neumann map for outgoing fields on a circle.

    Angular Fourier coefficients are multiplied by
    kappa H_n^(1)'(kappa R)/H_n^(1)(kappa R); modes where the Hankel value
    overflows fall back to the large-order ratio -|n|/R.
    """
    dirichlet = np.asarray(dirichlet)
    m = dirichlet.shape[-1]
    coeff = np.fft.fft(dirichlet, axis=-1)
    n = np.abs(np.fft.fftfreq(m, d=1.0 / m).astype(int))
    z = kappa * radius
    with np.errstate(over="ignore", invalid="ignore"):
        H = special.hankel1(n, z)
        # H_n' = H_{n-1} - (n/z) H_n, with H_{-1} = -H_1 covering n = 0
        Hm1 = np.where(n >= 1, special.hankel1(np.maximum(n, 1) - 1, z), -special.hankel1(1, z))
        ratio = kappa * (Hm1 - n / z * H) / H
    # evanescent orders where the Hankel value overflows: leading ratio -n/R
    ratio = np.where(np.isfinite(ratio), ratio, -n / radius)
    return np.fft.ifft(coeff * ratio, axis=-1)


# ---------------------------------------------------------------------------
# datasets and noise
# ---------------------------------------------------------------------------

@dataclass
class ScatteringDataset:
    """Bundle of far-field or near-field records at multiple frequencies."""

    kind: str  # "farfield" | "nearfield"
    dim: int
    radius: float
    records: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("farfield", "nearfield"):
            raise ValueError("kind must be 'farfield' or 'nearfield'")

    def kappas(self):
        return sorted({float(r.kappa) for r in self.records})

    def find_near(self, kappa, direction, tol=1e-9):
        d = np.asarray(direction, dtype=float)
        for r in self.records:
            if abs(r.kappa - kappa) <= tol and np.linalg.norm(r.direction - d) <= tol:
                return r
        raise LookupError(f"no near-field record at kappa={kappa}, d={d}")

    def value_rms(self):
        if self.kind == "farfield":
            vals = np.concatenate([r.values for r in self.records])
            return float(np.sqrt(np.mean(np.abs(vals) ** 2)))
        dir_vals = np.concatenate([r.dirichlet for r in self.records])
        neu_vals = np.concatenate([r.neumann for r in self.records])
        return (float(np.sqrt(np.mean(np.abs(dir_vals) ** 2))),
                float(np.sqrt(np.mean(np.abs(neu_vals) ** 2))))


def add_noise(dataset, eta, seed):
    """Independent circular complex Gaussian noise, std = eta * RMS per kind.

    Near-field Dirichlet and Neumann values are perturbed relative to their
    own RMS (they carry different physical scales).  Deterministic per seed.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = ScatteringDataset(kind=dataset.kind, dim=dataset.dim, radius=dataset.radius)
    if eta == 0:
        out.records = list(dataset.records)
        return out

    def perturb(arr, scale):
        g = rng.standard_normal(arr.shape) + 1j * rng.standard_normal(arr.shape)
        return arr + eta * scale * g / np.sqrt(2.0)

    if dataset.kind == "farfield":
        rms = dataset.value_rms()
        for r in dataset.records:
            out.records.append(FarFieldRecord(kappa=r.kappa, direction=r.direction,
                                              thetas=r.thetas, values=perturb(r.values, rms),
                                              magnetic=r.magnetic))
    else:
        rms_d, rms_n = dataset.value_rms()
        for r in dataset.records:
            out.records.append(NearFieldRecord(kappa=r.kappa, direction=r.direction,
                                               points=r.points, weights=r.weights,
                                               dirichlet=perturb(r.dirichlet, rms_d),
                                               neumann=perturb(r.neumann, rms_n),
                                               radius=r.radius))
    return out


# ---------------------------------------------------------------------------
# dataset CSV I/O
# header: "# kind dim R"; far-field rows: kappa, d..., theta..., re, im
# near-field rows: kappa, d..., point..., re, im, re_neumann, im_neumann
# boundary points follow the deterministic rule for (dim, kappa, R), so the
# quadrature weights are reconstructed on load and verified against the rows
# ---------------------------------------------------------------------------

def save_dataset(dataset, path):
    with open(path, "w") as fh:
        fh.write(f"# {dataset.kind} {dataset.dim} {dataset.radius!r}\n")
        for r in dataset.records:
            if dataset.kind == "farfield":
                for theta, v in zip(r.thetas, r.values):
                    cols = [repr(float(r.kappa))]
                    cols += [repr(float(c)) for c in r.direction]
                    cols += [repr(float(c)) for c in theta]
                    cols += [repr(float(v.real)), repr(float(v.imag))]
                    fh.write(", ".join(cols) + "\n")
            else:
                for p, dv, nv in zip(r.points, r.dirichlet, r.neumann):
                    cols = [repr(float(r.kappa))]
                    cols += [repr(float(c)) for c in r.direction]
                    cols += [repr(float(c)) for c in p]
                    cols += [repr(float(dv.real)), repr(float(dv.imag)),
                             repr(float(nv.real)), repr(float(nv.imag))]
                    fh.write(", ".join(cols) + "\n")


def load_dataset(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) < 4 or header[0] != "#":
            raise ValueError("dataset file must start with '# kind dim R'")
        kind, dim, radius = header[1], int(header[2]), float(header[3])
        rows = [np.array([float(t) for t in line.split(",")]) for line in fh if line.strip()]
    ds = ScatteringDataset(kind=kind, dim=dim, radius=radius)
    if not rows:
        return ds
    groups = {}
    for row in rows:
        key = (row[0], tuple(row[1:1 + dim]))
        groups.setdefault(key, []).append(row)
    for (kappa, d), rs in groups.items():
        d = np.asarray(d)
        if kind == "farfield":
            thetas = np.array([r[1 + dim:1 + 2 * dim] for r in rs])
            vals = np.array([r[1 + 2 * dim] + 1j * r[2 + 2 * dim] for r in rs])
            ds.records.append(FarFieldRecord(kappa=kappa, direction=d, thetas=thetas, values=vals))
        else:
            pts = np.array([r[1 + dim:1 + 2 * dim] for r in rs])
            dv = np.array([r[1 + 2 * dim] + 1j * r[2 + 2 * dim] for r in rs])
            nv = np.array([r[3 + 2 * dim] + 1j * r[4 + 2 * dim] for r in rs])
            ref_pts, weights = boundary_rule(dim, kappa, radius)
            if ref_pts.shape != pts.shape or np.max(np.abs(ref_pts - pts)) > 1e-9:
                raise ValueError("near-field boundary points do not match the deterministic rule")
            ds.records.append(NearFieldRecord(kappa=kappa, direction=d, points=pts,
                                              weights=weights, dirichlet=dv, neumann=nv,
                                              radius=radius))
    return ds
