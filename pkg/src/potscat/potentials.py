"""Builtin test potentials: scalar (gaussian, bump, two-bump) and magnetic.

The magnetic builtin is the curl of a z-aligned scalar envelope, hence
analytically divergence-free; amplitude means the max pointwise |b|.
"""

from __future__ import annotations

import numpy as np

from .fields import ClassParams, ScalarPotentialField, VectorPotentialField


def _mask(grid, values, support_radius):
    return np.where(grid.radius <= support_radius, values, 0.0)


def gaussian_potential(grid, amplitude, sigma, support_radius, smoothness=1.0, center=None):
    """A exp(-|x - c|^2 / (2 sigma^2)), hard-masked outside the support ball."""
    if center is None:
        r2 = grid.radius**2
    else:
        r2 = sum((x - c) ** 2 for x, c in zip(grid.meshes, center))
    vals = amplitude * np.exp(-r2 / (2.0 * sigma**2))
    vals = _mask(grid, vals, support_radius)
    params = ClassParams(smoothness=smoothness, bound=_class_bound(vals), support_radius=support_radius)
    return ScalarPotentialField(grid=grid, values=vals, class_params=params)


def _bump_profile(r2, radius):
    """C-infinity cutoff exp(1 - 1/(1 - s^2)), s = r/radius, zero for s >= 1."""
    s2 = r2 / radius**2
    out = np.zeros_like(s2)
    inside = s2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


def bump_potential(grid, amplitude, radius, support_radius=None, smoothness=1.0, center=None):
    """Exactly compactly supported smooth bump of the given radius."""
    support_radius = radius if support_radius is None else support_radius
    if radius > support_radius:
        raise ValueError("bump radius exceeds the declared support radius")
    if center is None:
        r2 = grid.radius**2
    else:
        r2 = sum((x - c) ** 2 for x, c in zip(grid.meshes, center))
    vals = amplitude * _bump_profile(r2, radius)
    params = ClassParams(smoothness=smoothness, bound=_class_bound(vals), support_radius=support_radius)
    return ScalarPotentialField(grid=grid, values=vals, class_params=params)


def two_bump_potential(grid, amplitude, radius, support_radius, smoothness=1.0):
    """Asymmetric pair of bumps with 3:2 amplitude ratio."""
    off = 0.45 * support_radius
    c1 = [off] + [0.0] * (grid.dim - 1)
    c2 = [-off, 0.35 * support_radius] + [0.0] * (grid.dim - 2)
    r2a = sum((x - c) ** 2 for x, c in zip(grid.meshes, c1))
    r2b = sum((x - c) ** 2 for x, c in zip(grid.meshes, c2))
    vals = amplitude * _bump_profile(r2a, radius) + (2.0 / 3.0) * amplitude * _bump_profile(r2b, radius)
    vals = _mask(grid, vals, support_radius)
    params = ClassParams(smoothness=smoothness, bound=_class_bound(vals), support_radius=support_radius)
    return ScalarPotentialField(grid=grid, values=vals, class_params=params)


def curl_gaussian_magnetic(grid, amplitude, sigma, support_radius, smoothness=1.0):
    """b = curl(0, 0, chi) with a Gaussian envelope chi; max |b| = amplitude.

    The analytic curl is divergence-free; the hard support mask leaves a
    ring-level residue, so the field is returned unflagged.  Apply
    `divergence_free_project` where exact discrete divergence is required.
    """
    if grid.dim != 3:
        raise ValueError("magnetic potentials require a 3D grid")
    X, Y, _ = grid.meshes
    r2 = grid.radius**2
    chi = np.exp(-r2 / (2.0 * sigma**2))
    bx = -Y / sigma**2 * chi
    by = X / sigma**2 * chi
    bz = np.zeros_like(chi)
    scale = amplitude / np.sqrt(bx**2 + by**2).max()
    comps = tuple(_mask(grid, c * scale, support_radius) for c in (bx, by, bz))
    params = ClassParams(smoothness=smoothness, bound=_vec_bound(comps), support_radius=support_radius)
    return VectorPotentialField(grid=grid, components=comps, class_params=params, divergence_free=False)


def curl_bump_magnetic(grid, amplitude, radius, support_radius=None, smoothness=1.0):
    """b = curl(0, 0, chi) with an exactly compact C-infinity bump envelope."""
    if grid.dim != 3:
        raise ValueError("magnetic potentials require a 3D grid")
    support_radius = radius if support_radius is None else support_radius
    X, Y, _ = grid.meshes
    r2 = grid.radius**2
    s2 = r2 / radius**2
    inside = s2 < 1.0
    chi = np.zeros_like(r2)
    chi[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    dchi = np.zeros_like(r2)  # d chi / d(s^2)
    dchi[inside] = -chi[inside] / (1.0 - s2[inside]) ** 2
    bx = dchi * 2.0 * Y / radius**2
    by = -dchi * 2.0 * X / radius**2
    bz = np.zeros_like(chi)
    mag = np.sqrt(bx**2 + by**2).max()
    scale = amplitude / mag if mag > 0 else 0.0
    comps = (bx * scale, by * scale, bz)
    params = ClassParams(smoothness=smoothness, bound=_vec_bound(comps), support_radius=support_radius)
    return VectorPotentialField(grid=grid, components=comps, class_params=params, divergence_free=False)


def gauge_gradient(grid, amplitude, sigma, support_radius):
    """grad(phi) for a smooth compact phi; used for gauge-invariance checks.

    phi = amplitude * exp(-r^2/(2 sigma^2)) masked at the support ball; sigma
    should be a few grid cells wide so the gradient is resolved.
    """
    r2 = grid.radius**2
    phi = amplitude * np.exp(-r2 / (2.0 * sigma**2))
    grads = tuple(_mask(grid, -x / sigma**2 * phi, support_radius) for x in grid.meshes)
    phi = _mask(grid, phi, support_radius)
    return phi, grads


def _class_bound(values):
    return float(max(np.abs(values).max(), 1e-300))


def _vec_bound(comps):
    return float(max(np.sqrt(sum(c * c for c in comps)).max(), 1e-300))


BUILTIN_SCALAR = {
    "gaussian": gaussian_potential,
    "bump": bump_potential,
    "two_bump": two_bump_potential,
}

BUILTIN_MAGNETIC = {
    "curl_gaussian": curl_gaussian_magnetic,
    "curl_bump": curl_bump_magnetic,
}


def make_scalar(name, grid, **params):
    try:
        factory = BUILTIN_SCALAR[name]
    except KeyError:
        raise ValueError(f"unknown builtin potential '{name}' "
                         f"(available: {', '.join(sorted(BUILTIN_SCALAR))})") from None
    return factory(grid, **params)


def make_magnetic(name, grid, **params):
    try:
        factory = BUILTIN_MAGNETIC[name]
    except KeyError:
        raise ValueError(f"unknown builtin magnetic potential '{name}' "
                         f"(available: {', '.join(sorted(BUILTIN_MAGNETIC))})") from None
    return factory(grid, **params)
