"""Optical system description: CTF, Zernike pupil basis, illumination geometry.

All frequency bookkeeping is done in cycles/um on DC-centered grids. The
coherent cutoff is na / wavelength; a bin belongs to the pupil iff its radial
frequency is strictly below the cutoff (bins exactly on the cutoff are out).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidModeCount, WindowOutOfBounds
from .field import grid_center, window_bounds


@dataclass(frozen=True)
class Illumination:
    """One LED direction, as direction sines of the incoming plane wave."""

    sx: float
    sy: float

    def __post_init__(self):
        if not (self.sx * self.sx + self.sy * self.sy < 1.0):
            raise ValueError(
                f"direction sines must satisfy sx^2 + sy^2 < 1, got ({self.sx}, {self.sy})")


@dataclass(frozen=True)
class OpticalConfig:
    """Geometry of one acquisition: optics, sampling, and LED directions."""

    wavelength_um: float
    na: float
    magnification: float
    camera_pixel_um: float
    upsample: int
    low_rows: int
    low_cols: int
    illuminations: tuple[Illumination, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.wavelength_um <= 0 or self.na <= 0 or self.na >= 1:
            raise ValueError("need wavelength > 0 and 0 < na < 1")
        if self.magnification <= 0 or self.camera_pixel_um <= 0:
            raise ValueError("need magnification > 0 and camera_pixel_um > 0")
        if self.upsample < 1 or self.low_rows < 1 or self.low_cols < 1:
            raise ValueError("upsample and capture dims must be >= 1")

    # object-plane sampling
    @property
    def pixel_low_um(self) -> float:
        return self.camera_pixel_um / self.magnification

    @property
    def pixel_high_um(self) -> float:
        return self.pixel_low_um / self.upsample

    @property
    def high_rows(self) -> int:
        return self.low_rows * self.upsample

    @property
    def high_cols(self) -> int:
        return self.low_cols * self.upsample

    @property
    def cutoff_cycles(self) -> float:
        """Coherent passband radius in cycles/um."""
        return self.na / self.wavelength_um

    @property
    def spectrum_scale(self) -> float:
        """Energy factor carried by a field reconstructed from the low-res
        spectrum window of the high-res grid: (low area) / (high area)."""
        return (self.low_rows * self.low_cols) / float(self.high_rows * self.high_cols)


def centered_freqs(n: int, pixel_um: float) -> np.ndarray:
    """Frequency coordinate (cycles/um) of each bin of a DC-centered axis."""
    return (np.arange(n) - n // 2) / (n * pixel_um)


def freq_grids(rows: int, cols: int, pixel_um: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-frequency and column-frequency grids, DC-centered, cycles/um."""
    fr = centered_freqs(rows, pixel_um)[:, None]
    fc = centered_freqs(cols, pixel_um)[None, :]
    return np.broadcast_to(fr, (rows, cols)), np.broadcast_to(fc, (rows, cols))


def make_ctf(cfg: OpticalConfig) -> np.ndarray:
    """Binary coherent transfer function on the capture grid.

    1 + 0j strictly inside the cutoff circle, 0 outside; bins exactly on the
    circle count as outside. Depends on frequency only through fr^2 + fc^2.
    """
    fr, fc = freq_grids(cfg.low_rows, cfg.low_cols, cfg.pixel_low_um)
    inside = fr * fr + fc * fc < cfg.cutoff_cycles ** 2
    return inside.astype(np.complex128)


def pupil_support(cfg: OpticalConfig) -> np.ndarray:
    """Boolean mask of the pupil disk (same strict-inequality rule as make_ctf)."""
    fr, fc = freq_grids(cfg.low_rows, cfg.low_cols, cfg.pixel_low_um)
    return fr * fr + fc * fc < cfg.cutoff_cycles ** 2


# ---------------------------------------------------------------------------
# Zernike basis (Noll single-index ordering, standard normalization)


def noll_to_nm(j: int) -> tuple[int, int]:
    """Map a 1-based Noll index to (n, m); negative m means the sine term."""
    if j < 1:
        raise InvalidModeCount(f"Noll index must be >= 1, got {j}")
    n = 0
    k = j - 1
    while k > n:
        n += 1
        k -= n
    m = (-1) ** j * ((n % 2) + 2 * ((k + ((n + 1) % 2)) // 2))
    return n, m


def _radial_poly(n: int, m: int, rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in range((n - m) // 2 + 1):
        coef = ((-1) ** k * math.factorial(n - k)
                / (math.factorial(k)
                   * math.factorial((n + m) // 2 - k)
                   * math.factorial((n - m) // 2 - k)))
        out += coef * rho ** (n - 2 * k)
    return out


@dataclass(frozen=True)
class ZernikeBasis:
    """First ``count`` Noll modes sampled on the capture-grid pupil.

    ``grids[l]`` is mode l+1; every mode is zero outside the unit disk
    rho = f / cutoff > 1 (the rim rho == 1 is kept).
    """

    count: int
    grids: np.ndarray  # (count, low_rows, low_cols) float64
    disk: np.ndarray   # bool, rho <= 1


def zernike_basis(cfg: OpticalConfig, count: int) -> ZernikeBasis:
    """Build modes 1..count. Mode 1 is piston; 2/3 tilts; 4 defocus; 5/6
    primary astigmatism, with the sqrt(n+1) / sqrt(2(n+1)) normalization."""
    if count < 1:
        raise InvalidModeCount(f"mode count must be >= 1, got {count}")
    fr, fc = freq_grids(cfg.low_rows, cfg.low_cols, cfg.pixel_low_um)
    rho = np.sqrt(fr * fr + fc * fc) / cfg.cutoff_cycles
    theta = np.arctan2(fr, fc)
    disk = rho <= 1.0
    grids = np.zeros((count, cfg.low_rows, cfg.low_cols))
    for idx in range(count):
        n, m = noll_to_nm(idx + 1)
        am = abs(m)
        radial = _radial_poly(n, am, rho)
        if m == 0:
            z = math.sqrt(n + 1.0) * radial
        elif m > 0:
            z = math.sqrt(2.0 * (n + 1.0)) * radial * np.cos(am * theta)
        else:
            z = math.sqrt(2.0 * (n + 1.0)) * radial * np.sin(am * theta)
        grids[idx] = np.where(disk, z, 0.0)
    return ZernikeBasis(count=count, grids=grids, disk=disk)


def pupil_from_params(ctf_amp: np.ndarray, coeffs: np.ndarray,
                      basis: ZernikeBasis) -> np.ndarray:
    """Complex pupil |C| * exp(i * sum_l coeffs[l] * Z_l).

    ctf_amp is the (real) pupil amplitude on the capture grid; bins where it
    is zero stay exactly zero regardless of the phase.
    """
    ctf_amp = np.asarray(ctf_amp, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if ctf_amp.shape != basis.grids.shape[1:]:
        raise DimensionMismatch(
            f"pupil amplitude {ctf_amp.shape} vs basis {basis.grids.shape[1:]}")
    if coeffs.shape != (basis.count,):
        raise DimensionMismatch(
            f"got {coeffs.shape[0] if coeffs.ndim == 1 else coeffs.shape} coefficients "
            f"for a {basis.count}-mode basis")
    phase = kernels.synth_phase(basis.grids, coeffs)
    return ctf_amp * np.exp(1j * phase)


# ---------------------------------------------------------------------------
# illumination geometry


def _round_half_away(x: float) -> int:
    """Round to nearest with halves away from zero (keeps +/- symmetry)."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def illumination_offsets(cfg: OpticalConfig) -> list[tuple[int, int]]:
    """Spectrum-bin offset (rows, cols) of each LED's pupil window center.

    The direction sines map to spatial frequency (s / wavelength), which is
    quantized to whole high-res spectrum bins. The full capture window shifted
    by each offset must stay inside the high-res grid; if not, the synthetic
    aperture does not fit and WindowOutOfBounds is raised.
    """
    high_shape = (cfg.high_rows, cfg.high_cols)
    center = grid_center(high_shape)
    # bin pitch is 1 / (N * pixel); identical on the low and high grids
    # because the field of view is shared
    df_rows = 1.0 / (cfg.high_rows * cfg.pixel_high_um)
    df_cols = 1.0 / (cfg.high_cols * cfg.pixel_high_um)
    offsets = []
    for ill in cfg.illuminations:
        off_r = _round_half_away(ill.sy / cfg.wavelength_um / df_rows)
        off_c = _round_half_away(ill.sx / cfg.wavelength_um / df_cols)
        try:
            window_bounds(center[0] + off_r, center[1] + off_c,
                          cfg.low_rows, cfg.low_cols, high_shape)
        except WindowOutOfBounds as exc:
            raise WindowOutOfBounds(
                f"illumination (sx={ill.sx}, sy={ill.sy}) shifts the capture "
                f"window off the high-res grid: {exc}") from exc
        offsets.append((off_r, off_c))
    return offsets


def defocus_phase(cfg: OpticalConfig, z_um: float) -> np.ndarray:
    """Angular-spectrum defocus phase over the pupil, piston removed.

    phase(k) = z * (sqrt(k0^2 - |k|^2) - k0) inside the pupil, 0 outside,
    with k0 = 2*pi / wavelength. Negative away from DC for positive z.
    """
    fr, fc = freq_grids(cfg.low_rows, cfg.low_cols, cfg.pixel_low_um)
    k0 = 2.0 * np.pi / cfg.wavelength_um
    k2 = (2.0 * np.pi) ** 2 * (fr * fr + fc * fc)
    support = pupil_support(cfg)
    kz = np.sqrt(np.maximum(k0 * k0 - k2, 0.0))
    return np.where(support, z_um * (kz - k0), 0.0)


def synthetic_aperture_mask(cfg: OpticalConfig) -> np.ndarray:
    """Union of all LED-shifted pupil disks on the high-res centered grid.

    Used to compare a reconstruction against ground truth only over the
    frequencies the measurements can actually carry.
    """
    offsets = illumination_offsets(cfg)
    fr, fc = freq_grids(cfg.high_rows, cfg.high_cols, cfg.pixel_high_um)
    df_rows = 1.0 / (cfg.high_rows * cfg.pixel_high_um)
    df_cols = 1.0 / (cfg.high_cols * cfg.pixel_high_um)
    mask = np.zeros((cfg.high_rows, cfg.high_cols), dtype=bool)
    cut2 = cfg.cutoff_cycles ** 2
    for off_r, off_c in offsets:
        dr = fr - off_r * df_rows
        dc = fc - off_c * df_cols
        mask |= dr * dr + dc * dc < cut2
    return mask
