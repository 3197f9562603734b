"""Green kernels of the free Schrodinger (Helmholtz) operator in 2D and 3D.

The 3D kernel is the closed form e^{i k r}/(4 pi r).  The 2D kernel is
(i/4) H_0^(1)(k r); for complex frequencies it is evaluated from the
integral representation

    R0(lam, r) = C e^{i lam r} int_0^inf e^{-t} t^{-1/2} (t/2 - i lam r)^{-1/2} dt

valid on the sector  arg(lam) in [-pi/4, pi/4] U [3pi/4, 5pi/4],  with the
principal square root and C = sqrt(2)/(4 pi).  The constant is calibrated
once against the real-axis Hankel value and pinned by a unit test.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

SECTOR_HALF_ANGLE = np.pi / 4
MAX_BESSEL_ORDER = 200

# prefactor of the sector integral; real-axis calibration reproduces this
# analytic value to machine precision (see tests)
KERNEL_2D_CONSTANT = np.sqrt(2.0) / (4.0 * np.pi)


class DomainError(ValueError):
    """Argument outside the admissible domain of a kernel or special function."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved_tol):
        super().__init__(f"{message} (achieved tolerance {achieved_tol:.3e})")
        self.achieved_tol = achieved_tol


@dataclass(frozen=True)
class SectorPoint:
    """Complex frequency restricted to the sector where the 2D kernel is analytic."""

    value: complex

    def __post_init__(self):
        if not in_sector(self.value):
            raise DomainError(f"{self.value} is outside the admissible sector")


def in_sector(lam, tol=1e-12):
    """True if arg(lam) lies in [-pi/4, pi/4] U [3pi/4, 5pi/4] and lam != 0."""
    lam = complex(lam)
    if lam == 0:
        return False
    ang = abs(np.angle(lam))
    return ang <= SECTOR_HALF_ANGLE + tol or ang >= np.pi - SECTOR_HALF_ANGLE - tol


def cylinder_bessel(n, x):
    """Bessel functions J_n(x), Y_n(x) for nonnegative integer order.

    Parameters
    ----------
    n : int
        Order, 0 <= n <= 200.
    x : float or ndarray
        Strictly positive argument.

    Returns
    -------
    (J, Y) : pair of floats or ndarrays
    """
    n = int(n)
    if n < 0:
        raise DomainError("order must be nonnegative")
    if n > MAX_BESSEL_ORDER:
        raise DomainError(f"order {n} exceeds supported maximum {MAX_BESSEL_ORDER}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("argument must be positive")
    J = special.jv(n, x)
    Y = special.yv(n, x)
    if x.ndim == 0:
        return float(J), float(Y)
    return J, Y


def _tanh_sinh_nodes(level, a, b):
    """tanh-sinh nodes/weights on (a, b) at the given refinement level."""
    h = 1.0 / 2**level
    s_max = 3.6
    s = np.arange(-s_max / h, s_max / h + 1) * h
    u = np.tanh(0.5 * np.pi * np.sinh(s))
    w = 0.5 * np.pi * np.cosh(s) / np.cosh(0.5 * np.pi * np.sinh(s)) ** 2
    return 0.5 * (b - a) * u + 0.5 * (a + b), 0.5 * (b - a) * w * h


def hankel0_sector(lam, r, tol=1e-10):
    """(i/4) H_0^(1)(lam r) on the sector, by tanh-sinh quadrature.

    The substitution t = u^2 absorbs the t^{-1/2} endpoint singularity; the
    integrand then decays like e^{-u^2} and is truncated at u = 9.  Levels
    are doubled until successive values agree to `tol` (absolute, relative
    to the running magnitude).

    Parameters
    ----------
    lam : complex
        Frequency in the sector.
    r : float or ndarray
        Positive separations; vectorized.

    Returns
    -------
    complex or ndarray
    """
    lam = complex(lam)
    if not in_sector(lam):
        raise DomainError(f"lambda = {lam} is outside the admissible sector")
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0.0):
        raise DomainError("separation r must be positive")

    shift = -1j * lam * r_arr
    prev = None
    err = np.inf
    for level in range(4, 11):
        u, w = _tanh_sinh_nodes(level, 0.0, 9.0)
        # principal branch: shift stays off the negative real axis on the sector
        vals = 2.0 * np.exp(-u * u)[:, None] * (0.5 * u[:, None] ** 2 + shift[None, :]) ** -0.5
        integral = w @ vals
        if prev is not None:
            err = float(np.max(np.abs(integral - prev)))
            if err <= tol * max(1.0, float(np.max(np.abs(integral)))):
                break
        prev = integral
    else:
        raise QuadratureError("sector kernel quadrature did not converge", err)

    out = KERNEL_2D_CONSTANT * np.exp(1j * lam * r_arr) * integral
    return complex(out[0]) if np.isscalar(r) or np.ndim(r) == 0 else out


def green_kernel(dim, kappa, r):
    """Outgoing free-space kernel at separation r.

    dim=3: e^{i kappa r} / (4 pi r).  dim=2: (i/4) H_0^(1)(kappa r); complex
    kappa must lie in the sector and is routed through `hankel0_sector`.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr == 0.0):
        raise DomainError("kernel is singular at r = 0")
    if np.any(r_arr < 0.0):
        raise DomainError("separation r must be positive")
    if dim == 3:
        return np.exp(1j * complex(kappa) * r_arr) / (4.0 * np.pi * r_arr)
    if dim == 2:
        if abs(complex(kappa).imag) < 1e-14:
            k = float(np.real(kappa))
            if k == 0.0:
                raise DomainError("2D kernel requires a nonzero frequency")
            return 0.25j * special.hankel1(0, k * r_arr)
        return hankel0_sector(kappa, r_arr)
    raise DomainError(f"dim must be 2 or 3, got {dim}")


def kernel_disc_average(kappa, radius):
    """Mean of the 2D kernel over the disc |x| <= radius.

    Uses int_0^a H_0(z r) r dr = (a/z) H_1(z a) + 2i/(pi z^2).  The closed
    form holds on the right half of the sector with the principal branch;
    left-sector frequencies are mapped through the exact reflection
    R0(-conj(lam), r) = conj(R0(lam, r)).
    """
    lam = complex(kappa)
    if not in_sector(lam):
        raise DomainError(f"{lam} is outside the admissible sector")
    if lam.real < 0:
        return complex(np.conj(kernel_disc_average(-np.conj(lam), radius)))
    a = float(radius)
    integral = 0.25j * 2.0 * np.pi * ((a / lam) * special.hankel1(1, lam * a)
                                      + 2j / (np.pi * lam**2))
    return complex(integral / (np.pi * a**2))


def green_kernel_gradient(dim, kappa, x, y):
    """Gradient in x of the free kernel, for real kappa.

    Radial derivative times the unit vector (x - y)/|x - y|:
    dim=3 uses d/dr[e^{ikr}/(4 pi r)] = (ik - 1/r) g; dim=2 uses
    (i/4) kappa H_0^(1)'(kappa r) with H_0' = -H_1.

    x, y : arrays of shape (..., dim); broadcastable.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = x - y
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    if np.any(r == 0.0):
        raise DomainError("gradient is singular at coincident points")
    kappa = float(kappa)
    if dim == 3:
        radial = (1j * kappa - 1.0 / r) * np.exp(1j * kappa * r) / (4.0 * np.pi * r)
    elif dim == 2:
        radial = -0.25j * kappa * special.hankel1(1, kappa * r)
    else:
        raise DomainError(f"dim must be 2 or 3, got {dim}")
    return radial[..., None] * diff / r[..., None]
