"""Reconstruction quality metrics, gauge-aware.

A coherent reconstruction is only defined up to a global phase, so every
complex comparison first rotates the candidate by the closed-form optimal
phase. Amplitude metrics need no alignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateReference, DimensionMismatch
from .field import center_shift, dft2, idft2, inverse_center_shift
from .optics import OpticalConfig, synthetic_aperture_mask


def global_phase_align(x: np.ndarray, ref: np.ndarray) -> tuple[np.ndarray, float]:
    """Rotate ``x`` by the phase minimizing ||exp(i*phi)*x - ref||.

    The minimizer is phi = arg(sum(conj(x) * ref)); returns (rotated, phi).
    """
    x = np.asarray(x, dtype=np.complex128)
    ref = np.asarray(ref, dtype=np.complex128)
    if x.shape != ref.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {ref.shape}")
    if not np.any(ref):
        raise DegenerateReference("reference is identically zero")
    phi = float(np.angle(np.sum(np.conj(x) * ref)))
    return np.exp(1j * phi) * x, phi


@dataclass(frozen=True)
class Metrics:
    rel_err_complex: float
    rel_err_amp: float
    psnr_amp: float


def metrics(recon: np.ndarray, truth: np.ndarray) -> Metrics:
    """rel_err_complex (after phase alignment), rel_err_amp, and psnr_amp.

    psnr_amp is computed on amplitudes with the truth's max as the peak;
    bit-identical inputs give the "inf" sentinel.
    """
    recon = np.asarray(recon, dtype=np.complex128)
    truth = np.asarray(truth, dtype=np.complex128)
    aligned, _ = global_phase_align(recon, truth)  # validates shape/reference
    tnorm = float(np.linalg.norm(truth))
    rel_complex = float(np.linalg.norm(aligned - truth)) / tnorm
    ra = np.abs(recon)
    ta = np.abs(truth)
    rel_amp = float(np.linalg.norm(ra - ta)) / float(np.linalg.norm(ta))
    peak = float(ta.max())
    mse = float(np.mean((ra - ta) ** 2))
    if mse == 0.0:
        psnr = float("inf")
    else:
        psnr = 10.0 * np.log10(peak * peak / mse)
    return Metrics(rel_err_complex=rel_complex, rel_err_amp=rel_amp,
                   psnr_amp=psnr)


def passband_filter(spatial: np.ndarray, cfg: OpticalConfig) -> np.ndarray:
    """Zero every spectrum bin outside the synthetic aperture (the union of
    all LED-shifted pupil disks) and return the filtered spatial field.

    Comparisons between a reconstruction and ground truth are only meaningful
    inside this union; everything outside was never measured.
    """
    spatial = np.asarray(spatial, dtype=np.complex128)
    mask = synthetic_aperture_mask(cfg)
    if spatial.shape != mask.shape:
        raise DimensionMismatch(
            f"field is {spatial.shape}, config wants {mask.shape}")
    spec = center_shift(dft2(spatial))
    return idft2(inverse_center_shift(spec * mask))


def passband_rel_err_amp(recon: np.ndarray, truth: np.ndarray,
                         cfg: OpticalConfig) -> float:
    """rel_err_amp between the two fields after synthetic-aperture filtering."""
    fr = passband_filter(recon, cfg)
    ft = passband_filter(truth, cfg)
    return metrics(fr, ft).rel_err_amp
