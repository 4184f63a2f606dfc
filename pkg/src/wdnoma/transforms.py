"""Core unitary transforms and prefix operations.

DFT/IDFT with symmetric 1/sqrt(N) normalization, quadratic-chirp diagonal
multiplies, the discrete affine Fourier transform (DAFT) implemented as
chirp-FFT-chirp, and cyclic / chirp-periodic prefix handling.

Conventions:
  * chirp_vector(N, c)[n] = exp(-j 2 pi c n^2), matching the diagonal of
    the chirp matrix used throughout.
  * Forward DAFT multiplies by the c1 chirp, takes the normalized DFT, then
    multiplies by the c2 chirp. The inverse undoes the three steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import ComplexSignal, Domain, expect


@dataclass(frozen=True)
class ChirpParams:
    """Quadratic chirp rates (cycles per squared sample index)."""

    c1: float
    c2: float = 0.0

    @classmethod
    def for_max_doppler(cls, kappa_max: int, N: int) -> "ChirpParams":
        """Default c1 = (2*kappa_max + 1) / (2N), c2 = 0.

        Makes 2*N*c1 an odd integer, so a (delay, Doppler) path maps to a
        single coupled shift in the affine domain.
        """
        if kappa_max < 0:
            raise ValueError("kappa_max must be non-negative")
        return cls(c1=(2 * kappa_max + 1) / (2 * N), c2=0.0)

    def shift_factor(self, N: int) -> int:
        """2*N*c1 rounded to the nearest integer (validated)."""
        raw = 2.0 * N * self.c1
        k = int(round(raw))
        if abs(raw - k) > 1e-9:
            raise ValueError(f"2*N*c1 = {raw} is not an integer; c1 must be k/(2N)")
        return k


def chirp_vector(N: int, c: float) -> np.ndarray:
    """exp(-j 2 pi c n^2) for n = 0..N-1."""
    n = np.arange(N)
    return np.exp(-2j * np.pi * c * n * n)


# ---------------------------------------------------------------------------
# Array kernels (operate on the last axis; shared with batched callers)
# ---------------------------------------------------------------------------

def dft_samples(x: np.ndarray) -> np.ndarray:
    return np.fft.fft(x, axis=-1) / np.sqrt(x.shape[-1])


def idft_samples(x: np.ndarray) -> np.ndarray:
    return np.fft.ifft(x, axis=-1) * np.sqrt(x.shape[-1])


def daft_samples(x: np.ndarray, p: ChirpParams) -> np.ndarray:
    N = x.shape[-1]
    return chirp_vector(N, p.c2) * dft_samples(chirp_vector(N, p.c1) * x)


def idaft_samples(y: np.ndarray, p: ChirpParams) -> np.ndarray:
    N = y.shape[-1]
    return chirp_vector(N, p.c1).conj() * idft_samples(chirp_vector(N, p.c2).conj() * y)


def add_cp_samples(x: np.ndarray, L_cp: int) -> np.ndarray:
    if L_cp == 0:
        return x.copy()
    return np.concatenate([x[..., -L_cp:], x], axis=-1)


def cpp_prefix_phases(N: int, L_cpp: int, c1: float) -> np.ndarray:
    """Diagonal of the CPP weighting: exp(-j 2 pi c1 (N^2 - 2N(L-k))), k=0..L-1."""
    k = np.arange(L_cpp)
    return np.exp(-2j * np.pi * c1 * (N * N - 2.0 * N * (L_cpp - k)))


def add_cpp_samples(x: np.ndarray, L_cpp: int, c1: float) -> np.ndarray:
    if L_cpp == 0:
        return x.copy()
    N = x.shape[-1]
    prefix = cpp_prefix_phases(N, L_cpp, c1) * x[..., -L_cpp:]
    return np.concatenate([prefix, x], axis=-1)


# ---------------------------------------------------------------------------
# Signal-level operations
# ---------------------------------------------------------------------------

def dft(x: ComplexSignal, N: int | None = None) -> ComplexSignal:
    """Normalized N-point DFT; time -> frequency."""
    s = expect(x, Domain.TIME, N)
    return ComplexSignal(dft_samples(s), Domain.FREQUENCY)


def idft(X: ComplexSignal, N: int | None = None) -> ComplexSignal:
    """Inverse of dft; frequency -> time."""
    s = expect(X, Domain.FREQUENCY, N)
    return ComplexSignal(idft_samples(s), Domain.TIME)


def chirp_diag_apply(x: ComplexSignal, c: float, conjugate: bool = False) -> ComplexSignal:
    """Pointwise multiply by exp(-j 2 pi c n^2) (or its conjugate)."""
    v = chirp_vector(len(x), c)
    if conjugate:
        v = v.conj()
    return ComplexSignal(x.samples * v, x.domain)


def daft(x: ComplexSignal, p: ChirpParams, N: int | None = None) -> ComplexSignal:
    """Discrete affine Fourier transform; time -> affine."""
    s = expect(x, Domain.TIME, N)
    return ComplexSignal(daft_samples(s, p), Domain.AFFINE)


def idaft(y: ComplexSignal, p: ChirpParams, N: int | None = None) -> ComplexSignal:
    """Inverse DAFT; affine -> time."""
    s = expect(y, Domain.AFFINE, N)
    return ComplexSignal(idaft_samples(s, p), Domain.TIME)


def _check_prefix(L: int, N: int):
    if L < 0:
        raise ValueError("prefix length must be non-negative")
    if L >= N:
        raise ValueError(f"prefix length {L} must be smaller than the block length {N}")


def add_cp(x: ComplexSignal, L_cp: int) -> ComplexSignal:
    """Prepend the last L_cp samples (cyclic prefix)."""
    s = expect(x, Domain.TIME)
    _check_prefix(L_cp, len(x))
    return ComplexSignal(add_cp_samples(s, L_cp), Domain.TIME)


def remove_cp(x: ComplexSignal, L_cp: int) -> ComplexSignal:
    """Drop the first L_cp samples."""
    s = expect(x, Domain.TIME)
    _check_prefix(L_cp, len(x) - L_cp)
    return ComplexSignal(s[L_cp:].copy(), Domain.TIME)


def add_cpp(x: ComplexSignal, L_cpp: int, p: ChirpParams, N: int | None = None) -> ComplexSignal:
    """Prepend a chirp-periodic prefix: last L_cpp samples with CPP phases."""
    s = expect(x, Domain.TIME, N)
    _check_prefix(L_cpp, len(x))
    return ComplexSignal(add_cpp_samples(s, L_cpp, p.c1), Domain.TIME)


def remove_cpp(x: ComplexSignal, L_cpp: int) -> ComplexSignal:
    """Drop the first L_cpp samples (the prefix phases are discarded with them)."""
    s = expect(x, Domain.TIME)
    _check_prefix(L_cpp, len(x) - L_cpp)
    return ComplexSignal(s[L_cpp:].copy(), Domain.TIME)
