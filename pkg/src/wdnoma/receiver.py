"""Uplink receiver: demodulation, noise power estimation, MMSE detection
and reconstruction/cancellation of the detected uplink signal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lstsq

from .channel import PathSet, apply_dd_channel_samples
from .frame import FrameLayout, OtfsFrameLayout, embed_data
from .signals import ComplexSignal, Domain, expect
from .waveforms import (
    SystemConfig,
    afdm_demod_samples,
    afdm_mod_samples,
    ofdm_demod_samples,
    ofdm_mod_samples,
    otfs_demod_samples,
    otfs_mod_samples,
)


@dataclass(frozen=True)
class EquivalentChannel:
    matrix: np.ndarray
    source: PathSet


@dataclass(frozen=True)
class NoiseEstimate:
    sigma2_hat: float
    n_samples: int

    def __post_init__(self):
        if self.sigma2_hat < 0:
            raise ValueError("noise power cannot be negative")


def demodulate_frame(r: ComplexSignal, cfg: SystemConfig) -> ComplexSignal:
    """Strip the CPP and DAFT back to the affine domain."""
    x = expect(r, Domain.TIME, cfg.frame_len_cpp)
    return ComplexSignal(afdm_demod_samples(x, cfg.chirp, cfg.L_cpp), Domain.AFFINE)


def estimate_noise_power(d_tilde: ComplexSignal, layout) -> NoiseEstimate:
    """Mean squared magnitude over the leakage-free NPE window."""
    window = layout.npe_window
    if window.size == 0:
        raise ValueError("NPE window is empty")
    vals = d_tilde.samples[window]
    return NoiseEstimate(float(np.mean(np.abs(vals) ** 2)), int(window.size))


def _mod_demod_fns(cfg: SystemConfig, waveform: str):
    if waveform == "afdm":
        return (lambda X: afdm_mod_samples(X, cfg.chirp, cfg.L_cpp),
                lambda r: afdm_demod_samples(r, cfg.chirp, cfg.L_cpp))
    if waveform == "otfs":
        return (lambda X: otfs_mod_samples(X, cfg.N1, cfg.N2, cfg.L_cp),
                lambda r: otfs_demod_samples(r, cfg.N1, cfg.N2, cfg.L_cp))
    if waveform == "ofdm":
        return (lambda X: ofdm_mod_samples(X, cfg.L_cp),
                lambda r: ofdm_demod_samples(r, cfg.L_cp))
    raise ValueError(f"unknown waveform {waveform!r}")


def build_equivalent_channel(ch: PathSet, cfg: SystemConfig, waveform: str = "afdm") -> EquivalentChannel:
    """N x N transmit-domain equivalent channel, built by impulse probing.

    Column i is demod(channel(mod(e_i))); the probe never materializes the
    five-matrix product. Path delays must fit inside the prefix.
    """
    mod, demod = _mod_demod_fns(cfg, waveform)
    prefix = ch.frame_len - cfg.N
    if ch.max_delay > prefix:
        raise ValueError(f"path delay {ch.max_delay} exceeds the prefix length {prefix}")
    E = np.eye(cfg.N, dtype=np.complex128)
    responses = demod(apply_dd_channel_samples(mod(E), ch))
    return EquivalentChannel(matrix=responses.T.copy(), source=ch)


def mmse_detect(d_tilde: ComplexSignal, H_eq: EquivalentChannel, sigma2_hat: float) -> ComplexSignal:
    """Solve (H^H H + sigma2 I) x = H^H d without forming the normal equations.

    Implemented as least squares on the stacked system [H; sqrt(sigma2) I],
    which keeps the conditioning of H itself (the normal equations square
    it, which matters for the near-noiseless case where the regularizer
    vanishes). With sigma2_hat = 0 this is exact zero-forcing; a rank
    deficient H is reported as a LinAlgError.
    """
    if sigma2_hat < 0:
        raise ValueError("sigma2_hat must be non-negative")
    H = H_eq.matrix
    N = H.shape[0]
    d = d_tilde.samples
    if d.shape != (N,):
        raise ValueError(f"signal length {d.shape} does not match the {N}x{N} channel")
    A = np.vstack([H, np.sqrt(sigma2_hat) * np.eye(N, dtype=np.complex128)])
    b = np.concatenate([d, np.zeros(N, dtype=np.complex128)])
    x, _, rank, _ = lstsq(A, b, lapack_driver="gelsy")
    if sigma2_hat == 0 and rank < N:
        raise np.linalg.LinAlgError(
            f"equivalent channel is rank deficient ({rank} < {N}) and sigma2_hat = 0")
    return ComplexSignal(x, d_tilde.domain)


def reconstruct_and_cancel(r: ComplexSignal, ch: PathSet, x_hat: np.ndarray,
                           layout, cfg: SystemConfig) -> ComplexSignal:
    """Rebuild the uplink frame from hard-decided data and subtract it.

    Guards are re-embedded as zeros (they were transmitted as zeros). The
    layout type selects the waveform: FrameLayout -> AFDM, OtfsFrameLayout
    -> OTFS.
    """
    frame = embed_data(np.asarray(x_hat), layout)
    if isinstance(layout, OtfsFrameLayout):
        s = otfs_mod_samples(frame.samples, cfg.N1, cfg.N2, cfg.L_cp)
    elif isinstance(layout, FrameLayout):
        s = afdm_mod_samples(frame.samples, cfg.chirp, cfg.L_cpp)
    else:
        raise TypeError(f"unsupported layout type {type(layout).__name__}")
    r_hat = apply_dd_channel_samples(s, ch)
    rx = expect(r, Domain.TIME, ch.frame_len)
    return ComplexSignal(rx - r_hat, Domain.TIME)
