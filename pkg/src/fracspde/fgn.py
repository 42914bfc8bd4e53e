"""Fractional Brownian motion sampling and truncated spectral noise fields.

Paths are generated by circulant embedding of the stationary increment
(fractional Gaussian noise) covariance, which reproduces the exact joint
law on a uniform grid at O(N log N) cost per path.  Every path is a pure
function of an :class:`RngStreamSpec`, so trajectories and modes can be
drawn in any order, on any worker, with identical results.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericError, ParameterError

# Relative tolerance on negative circulant eigenvalues before the embedding
# is declared invalid and the dense factorization fallback is used.
_EMBED_RELATIVE_TOL = 1e-9


def fbm_covariance(hurst: float, t: float, u: float) -> float:
    """Covariance of fractional Brownian motion at times ``t`` and ``u``."""
    if not 0.0 < hurst < 1.0:
        raise ParameterError(f"hurst index must lie in (0, 1), got {hurst}")
    if t < 0.0 or u < 0.0:
        raise ParameterError("covariance times must be nonnegative")
    h2 = 2.0 * hurst
    return 0.5 * (t**h2 + u**h2 - abs(t - u) ** h2)


@dataclass(frozen=True)
class RngStreamSpec:
    """Key of one independent noise stream.

    The derived generator is a pure function of the three fields; numpy's
    ``SeedSequence`` spawn-key mechanism guarantees collision-free streams
    for distinct (trajectory, mode) pairs under one master seed.
    """

    master_seed: int
    trajectory_index: int
    mode_index: int

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.trajectory_index, self.mode_index)
        )
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True, eq=False)
class FbmPath:
    """One fractional Brownian motion path on a uniform grid.

    ``values`` has length ``steps + 1`` with ``values[0] == 0``; increments
    are stationary Gaussian with variance ``grid_step**(2 * hurst)``.
    """

    hurst: float
    grid_step: float
    values: np.ndarray

    @property
    def steps(self) -> int:
        return self.values.shape[0] - 1


def _fgn_autocovariance(hurst: float, step: float, count: int) -> np.ndarray:
    """Autocovariance of the increment process at lags 0 .. count-1."""
    lag = np.arange(count, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * step**h2 * (
        np.abs(lag + 1.0) ** h2 - 2.0 * np.abs(lag) ** h2 + np.abs(lag - 1.0) ** h2
    )


@functools.lru_cache(maxsize=128)
def _embedding_sqrt_spectrum(hurst: float, steps: int, step: float) -> np.ndarray | None:
    """Square roots of the circulant embedding eigenvalues, or None.

    Returns None when the embedding has a negative eigenvalue beyond
    tolerance, signalling the dense fallback.  Small negative values from
    rounding are clipped to zero.
    """
    gamma = _fgn_autocovariance(hurst, step, steps + 1)
    circ = np.concatenate([gamma, gamma[-2:0:-1]])
    spectrum = np.fft.fft(circ).real
    top = spectrum.max()
    if spectrum.min() < -_EMBED_RELATIVE_TOL * top:
        return None
    sq = np.sqrt(np.clip(spectrum, 0.0, None))
    sq.setflags(write=False)
    return sq


def _draw_fgn_rows(
    hurst: float, steps: int, step: float, generators: list[np.random.Generator]
) -> np.ndarray:
    """Draw one increment row per generator; shape (len(generators), steps)."""
    sq = _embedding_sqrt_spectrum(hurst, steps, step)
    rows = len(generators)
    if sq is not None:
        m = sq.shape[0]
        z = np.empty((rows, m), dtype=complex)
        for r, rng in enumerate(generators):
            z[r].real = rng.standard_normal(m)
            z[r].imag = rng.standard_normal(m)
        paths = np.fft.ifft(sq * z, axis=1).real
        return np.ascontiguousarray(paths[:, :steps]) * np.sqrt(m)
    # Dense fallback: factor the increment covariance directly.
    cov = scipy.linalg.toeplitz(_fgn_autocovariance(hurst, step, steps))
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            "increment covariance is not positive definite within rounding; "
            f"H={hurst}, steps={steps}"
        ) from exc
    out = np.empty((rows, steps))
    for r, rng in enumerate(generators):
        out[r] = chol @ rng.standard_normal(steps)
    return out


def sample_fgn_increments(
    hurst: float, steps: int, step: float, stream: RngStreamSpec
) -> np.ndarray:
    """Increments of one fBm path; exact law, deterministic given the stream."""
    if not 0.5 < hurst < 1.0:
        raise ParameterError(f"hurst index must lie in (1/2, 1), got {hurst}")
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    if step <= 0.0:
        raise ParameterError(f"grid step must be positive, got {step}")
    return _draw_fgn_rows(hurst, steps, step, [stream.generator()])[0]


def sample_fbm_path(
    hurst: float, steps: int, step: float, stream: RngStreamSpec
) -> FbmPath:
    """Sample one path; ``values`` are the cumulative sums of the increments."""
    increments = sample_fgn_increments(hurst, steps, step, stream)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return FbmPath(hurst=hurst, grid_step=step, values=values)


def coarsen_path(path: FbmPath, factor: int) -> FbmPath:
    """Subsample a path at every ``factor``-th grid point.

    Pure subsampling of the stored values: the returned path is the same
    underlying trajectory on the coarser grid, bit for bit, and no
    randomness is consumed.
    """
    if factor < 1:
        raise ParameterError(f"coarsening factor must be >= 1, got {factor}")
    if factor == 1:
        return path
    if path.steps % factor != 0:
        raise ParameterError(
            f"coarsening factor {factor} does not divide step count {path.steps}"
        )
    return FbmPath(
        hurst=path.hurst,
        grid_step=path.grid_step * factor,
        values=path.values[::factor].copy(),
    )


def halve_increments(increments: np.ndarray) -> np.ndarray:
    """Sum adjacent increment pairs along the last axis (one halving step)."""
    n = increments.shape[-1]
    if n % 2 != 0:
        raise ParameterError(f"cannot halve an odd number of increments ({n})")
    shape = increments.shape[:-1] + (n // 2, 2)
    return increments.reshape(shape).sum(axis=-1)


class NoiseField:
    """Truncated spectral noise field: one fBm path per eigenmode.

    The spatial part is diagonal in the Dirichlet-Laplacian sine basis of
    (0, 1) with eigenvalue weights ``k**eigen_exponent``; the temporal part
    is one independent fBm path per mode, all on a shared uniform grid.
    The per-mode increment matrix is the primary data; path values are its
    cumulative sums.
    """

    def __init__(
        self,
        hurst: float,
        grid_step: float,
        eigen_exponent: float,
        increments: np.ndarray,
        domain_length: float = 1.0,
    ):
        if eigen_exponent > 0.0:
            raise ParameterError(
                f"eigenvalue exponent must be <= 0, got {eigen_exponent}"
            )
        if increments.ndim != 2:
            raise ParameterError("increments must be a (modes, steps) matrix")
        self.hurst = hurst
        self.grid_step = grid_step
        self.eigen_exponent = eigen_exponent
        self.increments = increments
        self.domain_length = domain_length

    @property
    def modes(self) -> int:
        return self.increments.shape[0]

    @property
    def steps(self) -> int:
        return self.increments.shape[1]

    @functools.cached_property
    def sqrt_eigenvalues(self) -> np.ndarray:
        k = np.arange(1, self.modes + 1, dtype=float)
        return k ** (0.5 * self.eigen_exponent)

    @functools.cached_property
    def values(self) -> np.ndarray:
        vals = np.empty((self.modes, self.steps + 1))
        vals[:, 0] = 0.0
        np.cumsum(self.increments, axis=1, out=vals[:, 1:])
        return vals

    @functools.cached_property
    def paths(self) -> tuple[FbmPath, ...]:
        return tuple(
            FbmPath(hurst=self.hurst, grid_step=self.grid_step, values=row)
            for row in self.values
        )

    @classmethod
    def sample(
        cls,
        hurst: float,
        steps: int,
        step: float,
        modes: int,
        eigen_exponent: float,
        master_seed: int,
        trajectory_index: int,
    ) -> "NoiseField":
        """Draw all mode paths of one trajectory (modes are 1-based streams)."""
        if modes < 1:
            raise ParameterError(f"mode count must be >= 1, got {modes}")
        if not 0.5 < hurst < 1.0:
            raise ParameterError(f"hurst index must lie in (1/2, 1), got {hurst}")
        gens = [
            RngStreamSpec(master_seed, trajectory_index, k).generator()
            for k in range(1, modes + 1)
        ]
        increments = _draw_fgn_rows(hurst, steps, step, gens)
        return cls(hurst, step, eigen_exponent, increments)

    def coarsen(self, factor: int) -> "NoiseField":
        """Coarsen the time grid by summing increments within each window.

        Power-of-two factors are applied as repeated pairwise halvings, so
        each adjacent resolution pair satisfies the exact coarse-equals-
        summed-fine identity used by the refinement studies.
        """
        if factor < 1:
            raise ParameterError(f"coarsening factor must be >= 1, got {factor}")
        if factor == 1:
            return self
        if self.steps % factor != 0:
            raise ParameterError(
                f"coarsening factor {factor} does not divide step count {self.steps}"
            )
        inc = self.increments
        remaining = factor
        while remaining % 2 == 0:
            inc = halve_increments(inc)
            remaining //= 2
        if remaining > 1:
            inc = inc.reshape(self.modes, inc.shape[1] // remaining, remaining).sum(
                axis=-1
            )
        return NoiseField(
            self.hurst,
            self.grid_step * factor,
            self.eigen_exponent,
            inc,
            self.domain_length,
        )


def noise_increments(field: NoiseField, n: int) -> np.ndarray:
    """Per-mode increments over the n-th step, ``W_k(t_n) - W_k(t_{n-1})``."""
    if not 1 <= n <= field.steps:
        raise ParameterError(f"step index {n} outside 1..{field.steps}")
    return field.increments[:, n - 1].copy()
