"""Singular-quadrature reference values for the nonlocal FEM operators.

This module was built before the closed-form assembly in ``fracfem`` and
stays independent of it: entries are computed straight from the defining
double integral by decomposing the plane into element pairs.

  * same-element pairs: the hats are linear there, so the integrand is
    exactly slope_i * slope_j * |x - y|**(1 - 2 s); the singular part is
    subtracted analytically (closed form, no quadrature);
  * vertex-touching pairs: composite tensor Gauss on panels refined
    geometrically toward the shared vertex, with the refinement depth
    increased until the value stops moving;
  * separated pairs: composite tensor Gauss, subdivision doubled until
    converged;
  * domain-exterior strips reduce to a 1-D weight
    (x**(-2 s) + (1 - x)**(-2 s)) / (2 s) integrated adaptively.

It is deliberately slow; it exists to anchor the production assembly.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .errors import NumericError
from .fracfem import Mesh1D

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(12)
_DEFAULT_TOL = 1e-8


def _hat(mesh: Mesh1D, node: int, x: np.ndarray) -> np.ndarray:
    return np.clip(1.0 - np.abs(x / mesh.h - node), 0.0, None)


def _hat_slope(mesh: Mesh1D, node: int, element: int) -> float:
    if element == node - 1:
        return 1.0 / mesh.h
    if element == node:
        return -1.0 / mesh.h
    return 0.0


def _panel_tensor_gauss(mesh, s, i, j, xa, xb, ya, yb) -> float:
    """Tensor 12-point Gauss over a family of rectangles, summed."""
    half_x = 0.5 * (xb - xa)
    half_y = 0.5 * (yb - ya)
    x = (xa + half_x)[:, None] + half_x[:, None] * _GAUSS_NODES[None, :]
    y = (ya + half_y)[:, None] + half_y[:, None] * _GAUSS_NODES[None, :]
    wx = half_x[:, None] * _GAUSS_WEIGHTS[None, :]
    wy = half_y[:, None] * _GAUSS_WEIGHTS[None, :]
    xg = x[:, :, None]
    yg = y[:, None, :]
    fi = _hat(mesh, i, xg) - _hat(mesh, i, yg)
    fj = _hat(mesh, j, xg) - _hat(mesh, j, yg)
    kern = np.abs(xg - yg) ** (-1.0 - 2.0 * s)
    vals = fi * fj * kern * wx[:, :, None] * wy[:, None, :]
    return float(vals.sum())


def _separated_pair(mesh, s, i, j, e, f, tol) -> float:
    """Element pair with positive gap: refine uniformly until converged."""
    h = mesh.h
    previous = None
    splits = 2
    while splits <= 64:
        edges_x = e * h + np.linspace(0.0, h, splits + 1)
        edges_y = f * h + np.linspace(0.0, h, splits + 1)
        xa, ya = np.meshgrid(edges_x[:-1], edges_y[:-1], indexing="ij")
        xb, yb = np.meshgrid(edges_x[1:], edges_y[1:], indexing="ij")
        value = _panel_tensor_gauss(
            mesh, s, i, j, xa.ravel(), xb.ravel(), ya.ravel(), yb.ravel()
        )
        if previous is not None and abs(value - previous) <= tol * max(
            1e-30, abs(value)
        ):
            return value
        previous = value
        splits *= 2
    raise NumericError(f"separated-pair quadrature did not converge (e={e}, f={f})")


def _touching_pair(mesh, s, i, j, e, f, tol) -> float:
    """Adjacent elements sharing one vertex: geometric corner refinement."""
    h = mesh.h
    vertex = max(e, f) * h
    previous = None
    levels = 24
    while levels <= 60:
        k = np.arange(levels, dtype=float)
        # Element below the vertex: panels shrink toward it from the left.
        lo_a = vertex - h * 0.5**k
        lo_b = vertex - h * 0.5 ** (k + 1.0)
        # Element above the vertex: mirrored panels.
        hi_a = vertex + h * 0.5 ** (k + 1.0)
        hi_b = vertex + h * 0.5**k
        if e < f:
            xa, xb, ya, yb = lo_a, lo_b, hi_a, hi_b
        else:
            xa, xb, ya, yb = hi_a, hi_b, lo_a, lo_b
        pxa, pya = np.meshgrid(xa, ya, indexing="ij")
        pxb, pyb = np.meshgrid(xb, yb, indexing="ij")
        value = _panel_tensor_gauss(
            mesh, s, i, j, pxa.ravel(), pxb.ravel(), pya.ravel(), pyb.ravel()
        )
        if previous is not None and abs(value - previous) <= tol * max(
            1e-30, abs(value)
        ):
            return value
        previous = value
        levels += 12
    raise NumericError(f"corner quadrature did not converge (e={e}, f={f})")


def _same_element(mesh, s, i, j, e) -> float:
    """Exact value on e x e: hats are linear, singularity integrates in closed form."""
    slope_product = _hat_slope(mesh, i, e) * _hat_slope(mesh, j, e)
    if slope_product == 0.0:
        return 0.0
    h = mesh.h
    return slope_product * 2.0 * h ** (3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))


def _exterior_strip(mesh, s, i, j) -> float:
    """Integral of hat_i hat_j times the complement weight over (0, 1)."""
    if abs(i - j) > 1:
        return 0.0
    h = mesh.h
    two_s = 2.0 * s

    def integrand(x):
        weight = (x**-two_s + (1.0 - x) ** -two_s) / two_s
        return _hat(mesh, i, x) * _hat(mesh, j, x) * weight

    lo_el = max(min(i, j) - 1, 0)
    hi_el = min(max(i, j), mesh.element_count - 1)
    total = 0.0
    for e in range(lo_el, hi_el + 1):
        val, _ = integrate.quad(
            integrand, e * h, (e + 1) * h, epsabs=1e-14, epsrel=1e-12, limit=200
        )
        total += val
    return total


def stiffness_entry(
    mesh: Mesh1D, s: float, i: int, j: int, tol: float = _DEFAULT_TOL
) -> float:
    """Reference stiffness entry for interior nodes i, j (1-based)."""
    constant = (
        2.0 ** (2.0 * s)
        * s
        * math.gamma(0.5 + s)
        / (math.sqrt(math.pi) * math.gamma(1.0 - s))
    )
    support = {i - 1, i, j - 1, j}
    total = 0.0
    for e in range(mesh.element_count):
        for f in range(mesh.element_count):
            if e not in (i - 1, i) and f not in (i - 1, i):
                continue
            if e not in (j - 1, j) and f not in (j - 1, j):
                continue
            if e == f:
                total += _same_element(mesh, s, i, j, e)
            elif abs(e - f) == 1:
                total += _touching_pair(mesh, s, i, j, e, f, tol)
            else:
                total += _separated_pair(mesh, s, i, j, e, f, tol)
    del support
    total += 2.0 * _exterior_strip(mesh, s, i, j)
    return constant * total


def coupling_entry(mesh: Mesh1D, j: int, k: int) -> float:
    """Reference value of (hat_j, sqrt(2) sin(k pi x)) by adaptive quadrature."""
    h = mesh.h

    def integrand(x):
        return _hat(mesh, j, x) * math.sqrt(2.0) * np.sin(k * math.pi * x)

    total = 0.0
    for e in (j - 1, j):
        val, _ = integrate.quad(
            integrand, e * h, (e + 1) * h, epsabs=1e-15, epsrel=1e-13, limit=200
        )
        total += val
    return total
