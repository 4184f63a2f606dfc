"""QAM mapping and the OFDM / AFDM / OTFS modulators.

All three modulators share the pattern prefix(unitary_inverse(x)); their
demodulators are exact inverses over an ideal channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signals import ComplexSignal, Domain, expect
from .transforms import (
    ChirpParams,
    add_cp_samples,
    add_cpp_samples,
    daft_samples,
    dft_samples,
    idaft_samples,
    idft_samples,
)


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters shared across the simulator."""

    N: int
    M: int
    f_c: float
    delta_f: float
    L_cp: int
    L_cpp: int
    chirp: ChirpParams
    N1: int
    N2: int
    echo_power_offset_db: float = -20.0

    def __post_init__(self):
        if self.N <= 0:
            raise ValueError("N must be positive")
        if self.N1 * self.N2 != self.N:
            raise ValueError(f"N1*N2 = {self.N1 * self.N2} must equal N = {self.N}")
        m_axis = int(round(np.sqrt(self.M)))
        if m_axis * m_axis != self.M or self.M < 4 or (self.M & (self.M - 1)) != 0:
            raise ValueError(f"M = {self.M} must be a square power of two (4, 16, 64, ...)")
        for name, L in (("L_cp", self.L_cp), ("L_cpp", self.L_cpp)):
            if not 0 <= L < self.N:
                raise ValueError(f"{name} = {L} out of range [0, N)")
        # sanity: the chirp must give an integer affine shift factor
        self.chirp.shift_factor(self.N)

    @property
    def sample_rate(self) -> float:
        return self.N * self.delta_f

    @property
    def frame_len_cp(self) -> int:
        return self.N + self.L_cp

    @property
    def frame_len_cpp(self) -> int:
        return self.N + self.L_cpp


# ---------------------------------------------------------------------------
# Gray-coded square QAM
# ---------------------------------------------------------------------------

def _gray_decode(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = 1
    while shift < b.itemsize * 8:
        b ^= b >> shift
        shift *= 2
    return b


def _gray_encode(b: np.ndarray) -> np.ndarray:
    return b ^ (b >> 1)


def _axis_params(M: int):
    m_axis = int(round(np.sqrt(M)))
    bits_per_axis = int(np.log2(m_axis))
    # unit average symbol energy for square QAM built from two PAM axes
    scale = np.sqrt(2.0 * (M - 1) / 3.0)
    return m_axis, bits_per_axis, scale


def qam_map(bits: np.ndarray, M: int) -> np.ndarray:
    """Gray-coded square M-QAM with unit average symbol energy.

    Bits are consumed per symbol; the first half of each group selects the
    in-phase level, the second half the quadrature level. All-zero bits map
    to the top-right corner point, e.g. (1+1j)/sqrt(2) for QPSK.
    """
    m_axis, bpa, scale = _axis_params(M)
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 1 or bits.size % (2 * bpa) != 0:
        raise ValueError(f"bit count {bits.size} not divisible by log2(M) = {2 * bpa}")
    groups = bits.reshape(-1, 2 * bpa)
    weights = 1 << np.arange(bpa - 1, -1, -1, dtype=np.int64)
    gi = groups[:, :bpa] @ weights
    gq = groups[:, bpa:] @ weights
    li = m_axis - 1 - 2 * _gray_decode(gi)
    lq = m_axis - 1 - 2 * _gray_decode(gq)
    return (li + 1j * lq) / scale


def qam_demap_hard(symbols: np.ndarray, M: int) -> np.ndarray:
    """Nearest-point hard decision; exact inverse of qam_map on clean input."""
    m_axis, bpa, scale = _axis_params(M)
    symbols = np.asarray(symbols) * scale

    def axis_bits(vals):
        k = np.clip(np.round((m_axis - 1 - vals) / 2.0).astype(np.int64), 0, m_axis - 1)
        g = _gray_encode(k)
        return (g[:, None] >> np.arange(bpa - 1, -1, -1)) & 1

    bi = axis_bits(symbols.real)
    bq = axis_bits(symbols.imag)
    return np.concatenate([bi, bq], axis=1).reshape(-1)


def constellation(M: int) -> np.ndarray:
    """All M constellation points, indexed by their bit pattern."""
    bpa = int(np.log2(M))
    bits = ((np.arange(M)[:, None] >> np.arange(bpa - 1, -1, -1)) & 1).reshape(-1)
    return qam_map(bits, M)


# ---------------------------------------------------------------------------
# Batched modulator kernels (last-axis layout, reused by the receiver probes)
# ---------------------------------------------------------------------------

def ofdm_mod_samples(X: np.ndarray, L_cp: int) -> np.ndarray:
    return add_cp_samples(idft_samples(X), L_cp)


def ofdm_demod_samples(r: np.ndarray, L_cp: int) -> np.ndarray:
    return dft_samples(r[..., L_cp:])


def afdm_mod_samples(X: np.ndarray, chirp: ChirpParams, L_cpp: int) -> np.ndarray:
    return add_cpp_samples(idaft_samples(X, chirp), L_cpp, chirp.c1)


def afdm_demod_samples(r: np.ndarray, chirp: ChirpParams, L_cpp: int) -> np.ndarray:
    return daft_samples(r[..., L_cpp:], chirp)


def otfs_mod_samples(X: np.ndarray, N1: int, N2: int, L_cp: int) -> np.ndarray:
    # delay-major vector -> (N2, N1) grid slices; IDFT runs across Doppler
    grid = X.reshape(X.shape[:-1] + (N2, N1))
    s = (np.fft.ifft(grid, axis=-2) * np.sqrt(N2)).reshape(X.shape)
    return add_cp_samples(s, L_cp)


def otfs_demod_samples(r: np.ndarray, N1: int, N2: int, L_cp: int) -> np.ndarray:
    y = r[..., L_cp:]
    grid = y.reshape(y.shape[:-1] + (N2, N1))
    return (np.fft.fft(grid, axis=-2) / np.sqrt(N2)).reshape(y.shape)


# ---------------------------------------------------------------------------
# Modulator / demodulator pairs
# ---------------------------------------------------------------------------

def ofdm_modulate(x: ComplexSignal, cfg: SystemConfig) -> ComplexSignal:
    """IDFT + cyclic prefix; frequency -> time, length N + L_cp."""
    X = expect(x, Domain.FREQUENCY, cfg.N)
    return ComplexSignal(ofdm_mod_samples(X, cfg.L_cp), Domain.TIME)


def ofdm_demodulate(r: ComplexSignal, cfg: SystemConfig) -> ComplexSignal:
    X = expect(r, Domain.TIME, cfg.frame_len_cp)
    return ComplexSignal(ofdm_demod_samples(X, cfg.L_cp), Domain.FREQUENCY)


def afdm_modulate(x: ComplexSignal, cfg: SystemConfig) -> ComplexSignal:
    """IDAFT + chirp-periodic prefix; affine -> time, length N + L_cpp."""
    X = expect(x, Domain.AFFINE, cfg.N)
    return ComplexSignal(afdm_mod_samples(X, cfg.chirp, cfg.L_cpp), Domain.TIME)


def afdm_demodulate(r: ComplexSignal, cfg: SystemConfig) -> ComplexSignal:
    X = expect(r, Domain.TIME, cfg.frame_len_cpp)
    return ComplexSignal(afdm_demod_samples(X, cfg.chirp, cfg.L_cpp), Domain.AFFINE)


def otfs_modulate(x: ComplexSignal, cfg: SystemConfig) -> ComplexSignal:
    """Inverse DFT across the Doppler dimension + cyclic prefix.

    The delay-Doppler vector is delay-major: entry n2*N1 + n1 is delay bin
    n1, Doppler bin n2.
    """
    X = expect(x, Domain.DELAY_DOPPLER, cfg.N)
    return ComplexSignal(otfs_mod_samples(X, cfg.N1, cfg.N2, cfg.L_cp), Domain.TIME)


def otfs_demodulate(r: ComplexSignal, cfg: SystemConfig) -> ComplexSignal:
    X = expect(r, Domain.TIME, cfg.frame_len_cp)
    return ComplexSignal(otfs_demod_samples(X, cfg.N1, cfg.N2, cfg.L_cp), Domain.DELAY_DOPPLER)
