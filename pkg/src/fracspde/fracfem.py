"""Piecewise-linear finite element operators on a uniform grid of (0, 1).

The nonlocal stiffness matrix discretizes the integral fractional
Laplacian of order ``s``: entry (i, j) is

    c(1, s) * intint (hat_i(x) - hat_i(y)) (hat_j(x) - hat_j(y))
                     / |x - y|**(1 + 2 s)  dy dx

over the whole plane, hats extended by zero outside (0, 1) (the
homogeneous exterior condition).  Substituting u = x - y collapses the
double integral to a single one against the hat autocorrelation

    r(t) = int hat(x) hat(x + t) dx,

a piecewise cubic supported on |t| <= 2, giving for node distance ``l``

    entry = c(1, s) * h**(1 - 2 s) * 2 * int_0^inf
            [2 r(l) - r(l + u) - r(l - u)] * u**(-1 - 2 s) du.

The bracket is piecewise cubic with integer breakpoints and vanishes to
second order at u = 0, so each piece integrates in closed form through
power antiderivatives; the lone degenerate exponent (s = 1/2) turns into
a logarithm and is routed through a guard band.  Piece algebra runs in
exact rational arithmetic so the cancellations at u = 0 are exact.

Entries depend on |i - j| only (translation invariance of the kernel and
the uniform grid), hence the matrix is symmetric Toeplitz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import AssemblyError, ParameterError

# Guard band around degenerate antiderivative exponents (s = 1/2 hits the
# logarithmic case of the k = 1 power term).
_LOG_GUARD = 2e-8

# Cubic pieces of the hat autocorrelation r(t) on [k, k+1), low-to-high
# coefficients in t.  r is even, C^1, and vanishes for |t| >= 2.
_R_PIECES = {
    -2: (Fraction(4, 3), Fraction(2), Fraction(1), Fraction(1, 6)),
    -1: (Fraction(2, 3), Fraction(0), Fraction(-1), Fraction(-1, 2)),
    0: (Fraction(2, 3), Fraction(0), Fraction(-1), Fraction(1, 2)),
    1: (Fraction(4, 3), Fraction(-2), Fraction(1), Fraction(-1, 6)),
}


@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh of (0, 1) with P elements and P - 1 interior nodes."""

    element_count: int

    def __post_init__(self):
        if self.element_count < 2:
            raise ParameterError(
                f"element count must be >= 2, got {self.element_count}"
            )

    @property
    def h(self) -> float:
        return 1.0 / self.element_count

    @property
    def interior_node_count(self) -> int:
        return self.element_count - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.element_count) * self.h


def frac_constant(dim: int, s: float) -> float:
    """Normalizing constant of the integral fractional Laplacian kernel."""
    if not 0.0 < s < 1.0:
        raise ParameterError(f"fractional order must lie in (0, 1), got {s}")
    return (
        2.0 ** (2.0 * s)
        * s
        * math.gamma(0.5 * dim + s)
        / (math.pi ** (0.5 * dim) * math.gamma(1.0 - s))
    )


def assemble_mass(mesh: Mesh1D) -> np.ndarray:
    """P1 mass matrix: tridiagonal with diagonal 2h/3 and off-diagonal h/6."""
    m = mesh.interior_node_count
    h = mesh.h
    mat = np.zeros((m, m))
    np.fill_diagonal(mat, 2.0 * h / 3.0)
    idx = np.arange(m - 1)
    mat[idx, idx + 1] = h / 6.0
    mat[idx + 1, idx] = h / 6.0
    return mat


def mass_apply(mesh: Mesh1D, values: np.ndarray) -> np.ndarray:
    """Mass-matrix product along axis 0 without forming the dense matrix."""
    h = mesh.h
    out = (2.0 * h / 3.0) * values
    out[1:] += (h / 6.0) * values[:-1]
    out[:-1] += (h / 6.0) * values[1:]
    return out


def mass_norm_sq(mesh: Mesh1D, values: np.ndarray) -> np.ndarray:
    """Squared L2 norm of FEM functions given nodal coefficients (axis 0)."""
    h = mesh.h
    quad = (2.0 * h / 3.0) * np.sum(values * values, axis=0)
    quad += (h / 3.0) * np.sum(values[:-1] * values[1:], axis=0)
    return quad


def _r_eval(t: Fraction) -> Fraction:
    if t <= -2 or t >= 2:
        return Fraction(0)
    piece = _R_PIECES[math.floor(t)]
    return sum(c * t**k for k, c in enumerate(piece))


def _r_shifted_coeffs(lag: int, sign: int, a: Fraction, b: Fraction):
    """Coefficients in u of r(lag + sign * u) on one breakpoint interval."""
    mid = (a + b) / 2
    t_mid = lag + sign * mid
    if t_mid <= -2 or t_mid >= 2:
        return (Fraction(0),) * 4
    piece = _R_PIECES[math.floor(t_mid)]
    out = [Fraction(0)] * 4
    for k, ck in enumerate(piece):
        if ck == 0:
            continue
        for r in range(k + 1):
            out[r] += ck * math.comb(k, r) * Fraction(lag) ** (k - r) * sign**r
    return tuple(out)


def _lag_breakpoint_intervals(lag: int):
    knots = {Fraction(0)}
    for c in (1, 2):
        if c - lag > 0:
            knots.add(Fraction(c - lag))
    for c in (-2, -1, 0, 1, 2):
        if lag - c > 0:
            knots.add(Fraction(lag - c))
    ordered = sorted(knots)
    return list(zip(ordered[:-1], ordered[1:]))


def _power_moment(a: float, b: float, eps: float) -> float:
    """Integral of u**(eps - 1) over (a, b), log form near eps = 0."""
    if a == 0.0:
        return b**eps / eps
    if abs(eps) < _LOG_GUARD:
        return math.log(b / a)
    return a**eps * math.expm1(eps * math.log(b / a)) / eps


def dimensionless_stiffness_lag(lag: int, s: float) -> float:
    """The lag integral I(l, s) on a unit-spacing grid (no constant, no h)."""
    two_s = 2.0 * s
    r_lag = _r_eval(Fraction(lag))
    total = 0.0
    for a, b in _lag_breakpoint_intervals(lag):
        shift_plus = _r_shifted_coeffs(lag, +1, a, b)
        shift_minus = _r_shifted_coeffs(lag, -1, a, b)
        coeffs = [2 * r_lag - shift_plus[0] - shift_minus[0]]
        coeffs += [-shift_plus[r] - shift_minus[r] for r in range(1, 4)]
        if a == 0:
            # The bracket vanishes to second order at u = 0; exact rational
            # algebra must reproduce that, or the power moments diverge.
            assert coeffs[0] == 0 and coeffs[1] == 0
        fa, fb = float(a), float(b)
        for r, cr in enumerate(coeffs):
            if cr == 0:
                continue
            total += float(cr) * _power_moment(fa, fb, r - two_s)
    if r_lag != 0:
        total += 2.0 * float(r_lag) * float(lag + 2) ** (-two_s) / two_s
    return 2.0 * total


def stiffness_lags(mesh: Mesh1D, s: float) -> np.ndarray:
    """First Toeplitz column of the fractional stiffness matrix."""
    if not 0.0 < s < 1.0:
        raise ParameterError(f"fractional order must lie in (0, 1), got {s}")
    scale = frac_constant(1, s) * mesh.h ** (1.0 - 2.0 * s)
    lags = np.array(
        [dimensionless_stiffness_lag(lag, s) for lag in range(mesh.interior_node_count)]
    )
    return scale * lags


def assemble_frac_stiffness(
    mesh: Mesh1D, s: float, self_check: bool = False, check_tol: float = 1e-6
) -> np.ndarray:
    """Dense symmetric Toeplitz stiffness matrix of the nonlocal form.

    With ``self_check`` the first few lag entries (and the last one) are
    re-derived through the independent singular-quadrature oracle; any
    relative disagreement beyond ``check_tol`` raises ``AssemblyError``.
    """
    column = stiffness_lags(mesh, s)
    if self_check:
        from . import quadoracle

        m = mesh.interior_node_count
        lags = sorted({0, 1, 2, min(3, m - 1), m - 1})
        for lag in lags:
            reference = quadoracle.stiffness_entry(mesh, s, 1, 1 + lag)
            scale = max(abs(reference), abs(column[0]) * 1e-12)
            if abs(column[lag] - reference) > check_tol * scale:
                raise AssemblyError(
                    f"stiffness entry at lag {lag} disagrees with the quadrature "
                    f"oracle: closed form {column[lag]!r}, oracle {reference!r}"
                )
    return scipy.linalg.toeplitz(column)


def assemble_coupling(mesh: Mesh1D, modes: int) -> np.ndarray:
    """Inner products (hat_j, sqrt(2) sin(k pi x)); shape (nodes, modes).

    Closed form: the hat against sin(k pi x) integrates to
    sin(k pi x_j) (2 - 2 cos(k pi h)) / (k pi)**2 / h.
    """
    if modes < 1:
        raise ParameterError(f"mode count must be >= 1, got {modes}")
    h = mesh.h
    kpi = np.arange(1, modes + 1) * math.pi
    weight = math.sqrt(2.0) * (2.0 - 2.0 * np.cos(kpi * h)) / (kpi**2 * h)
    return np.sin(np.outer(mesh.nodes, kpi)) * weight[None, :]


def sine_transform(coeffs: np.ndarray, mesh: Mesh1D, modes: int) -> np.ndarray:
    """Spectral coefficients (u_h, sqrt(2) sin(k pi x)) of a FEM function."""
    return assemble_coupling(mesh, modes).T @ coeffs


@dataclass(frozen=True, eq=False)
class FemOperators:
    """Immutable bundle of the assembled operators for one (mesh, s, modes)."""

    mesh: Mesh1D
    s: float
    mass: np.ndarray
    stiffness: np.ndarray
    coupling: np.ndarray

    @classmethod
    def assemble(
        cls, mesh: Mesh1D, s: float, modes: int, self_check: bool = False
    ) -> "FemOperators":
        return cls(
            mesh=mesh,
            s=s,
            mass=assemble_mass(mesh),
            stiffness=assemble_frac_stiffness(mesh, s, self_check=self_check),
            coupling=assemble_coupling(mesh, modes),
        )

    @property
    def modes(self) -> int:
        return self.coupling.shape[1]
