"""OSNR control: ASE-style noise loading to a target OSNR, and OSNR
measurement from a noisy record.

OSNR here is signal power in the configured signal band over noise power in
the reference bandwidth (12.5 GHz, the 0.1 nm convention, by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GuardBandError, SignalPowerError
from .fields import OpticalField, SimGrid, spectrum

DEFAULT_REFERENCE_BANDWIDTH = 12.5e9

# measure_osnr needs signal-free spectrum on both sides; keep this fraction
# of the band next to Nyquist and this margin beyond the signal band.
GUARD_EDGE_FRACTION = 0.05
GUARD_MARGIN_FRACTION = 0.05


@dataclass(frozen=True)
class OsnrSpec:
    """Target OSNR and the bands used to define it.

    ``signal_band`` is (center_offset, width) in Hz around the field center.
    ``target_osnr_db`` may be ``inf`` for the no-noise case.
    """

    target_osnr_db: float
    signal_band: tuple[float, float]
    reference_bandwidth: float = DEFAULT_REFERENCE_BANDWIDTH
    seed: int = 0

    def __post_init__(self):
        if not (self.reference_bandwidth > 0):
            raise ValueError("reference_bandwidth must be positive")
        if math.isnan(self.target_osnr_db):
            raise ValueError("target_osnr_db must be a number or +inf")
        center, width = self.signal_band
        if not (width > 0):
            raise ValueError(f"signal band width must be positive, got {width}")


def white_noise(
    grid: SimGrid, psd_w_per_hz: float, seed, center_frequency: float = 0.0
) -> OpticalField:
    """Circularly-symmetric complex white Gaussian noise field.

    ``psd_w_per_hz`` is the two-sided envelope noise density; total power is
    ``psd * sample_rate``. Deterministic per seed.
    """
    if psd_w_per_hz < 0:
        raise ValueError("noise PSD must be >= 0")
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(psd_w_per_hz * grid.sample_rate / 2.0)
    samples = sigma * (
        rng.standard_normal(grid.n_samples) + 1j * rng.standard_normal(grid.n_samples)
    )
    return OpticalField(samples, grid.sample_rate, center_frequency)


def load_ase(field: OpticalField, spec: OsnrSpec) -> OpticalField:
    """Add white Gaussian noise across the whole simulation band so that the
    signal-band power over the noise in the reference bandwidth hits the
    target OSNR. Deterministic per seed; an infinite target is a no-op."""
    if math.isinf(spec.target_osnr_db):
        return field
    center, width = spec.signal_band
    p_signal = spectrum(field).band_power_w(center, width)
    if p_signal <= 0:
        raise SignalPowerError(
            f"non-positive signal power in band ({center:.6g} Hz, {width:.6g} Hz wide)"
        )
    n_psd = p_signal / (spec.reference_bandwidth * 10.0 ** (spec.target_osnr_db / 10.0))
    noise = white_noise(field.grid, n_psd, spec.seed, field.center_frequency)
    return field.with_samples(field.samples + noise.samples)


def measure_osnr(field: OpticalField, spec: OsnrSpec) -> float:
    """Estimate OSNR from the record.

    The noise density is taken from guard bands beyond the signal band (and
    clear of the Nyquist edges); the signal-band power is noise-corrected
    before forming the ratio. Returns +inf when the guard bands carry no
    measurable noise.
    """
    nyq = field.sample_rate / 2.0
    center, width = spec.signal_band
    lo, hi = center - width / 2.0, center + width / 2.0
    margin = GUARD_MARGIN_FRACTION * field.sample_rate
    edge = (1.0 - GUARD_EDGE_FRACTION) * nyq
    spec_est = spectrum(field)
    offs = spec_est.bin_offsets
    guard = ((offs < lo - margin) | (offs > hi + margin)) & (np.abs(offs) < edge)
    if not np.any(guard):
        raise GuardBandError(
            "no guard band: signal band plus margins covers the whole record"
        )
    powers = spec_est.bin_powers_w()
    n_psd = float(np.mean(powers[guard])) / spec_est.resolution_bandwidth
    band = (offs >= lo) & (offs < hi)
    p_band = float(np.sum(powers[band]))
    p_signal = p_band - n_psd * width
    p_noise_ref = n_psd * spec.reference_bandwidth
    if p_noise_ref <= 0 or p_signal <= p_noise_ref * 1e-30:
        return math.inf
    return 10.0 * math.log10(p_signal / p_noise_ref)


def sweep_seed(root_seed: int, index: int) -> list[int]:
    """Derived seed for sweep point ``index``: the documented counter scheme
    is the pair [root_seed, index] fed to numpy's default_rng."""
    return [int(root_seed), int(index)]
