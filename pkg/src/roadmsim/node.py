"""Subcarrier add/drop node.

The node taps the incoming superchannel, coherently converts the dropped
subcarrier into a decimated digital record, subtracts the replacement
waveform, re-modulates the difference onto a tapped comb line, and
superimposes it onto the untouched through path with an interferometer whose
phase, delay, and amplitude are set by a feedback-style optimizer. With the
interferometer aligned, the incumbent subcarrier (and any in-band noise it
carries) cancels destructively while the replacement lands in its place; all
other subcarriers pass through untouched.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    AlignmentError,
    CombLineAbsentError,
    GridMismatchError,
    RateMismatchError,
    SignalPowerError,
)
from .fields import (
    OpticalField,
    apply_band_filter,
    band_response,
    bandpass,
    couple_2x2,
    delay as field_delay,
    spectrum,
)
from .transceiver import BitStream, SubcarrierPlan, modulate_subcarrier

# Output coupler of the interferometer; symmetric split keeps the ideal
# lower-path amplitude scale at 1.0 for a 50% input tap.
OUTPUT_COUPLER_RATIO = 0.5

DEFAULT_PROCESSING_BANDWIDTH = 24e9
DEFAULT_PROCESSING_RATE = 100e9


@dataclass(frozen=True)
class AddDropConfig:
    """Settings of one add/drop operation.

    Offsets are relative to the superchannel field center. ``lo_offset``
    names the comb line used as local oscillator for both the coherent drop
    and the re-modulation carrier; ``target_offset`` is the optical offset
    the replacement subcarrier must occupy. ``theta``/``tau``/``amp_scale``
    are the interferometer settings, normally produced by
    :func:`align_interferometer`. The digital processing path is low-passed
    at ``processing_bandwidth`` and decimated to ``processing_rate``.
    """

    drop_index: int
    lo_offset: float
    target_offset: float
    tap_ratio: float = 0.5
    theta: float = 0.0
    tau: float = 0.0
    amp_scale: float = 1.0
    processing_bandwidth: float = DEFAULT_PROCESSING_BANDWIDTH
    processing_rate: float = DEFAULT_PROCESSING_RATE

    def __post_init__(self):
        if not (0.0 < self.tap_ratio < 1.0):
            raise ValueError(f"tap_ratio must be in (0, 1), got {self.tap_ratio}")
        if self.drop_index < 0:
            raise ValueError(f"drop_index must be >= 0, got {self.drop_index}")
        if not (self.processing_bandwidth > 0):
            raise ValueError("processing_bandwidth must be positive")
        if self.processing_rate < 2.0 * self.processing_bandwidth:
            raise ValueError(
                "processing_rate must be at least twice the processing bandwidth"
            )
        if abs(self.target_offset - self.lo_offset) >= self.processing_rate / 2.0:
            raise ValueError(
                "frequency shift target_offset - lo_offset exceeds the processing Nyquist"
            )

    @property
    def digital_offset(self) -> float:
        """Offset of the dropped subcarrier inside the digital record."""
        return self.target_offset - self.lo_offset


@dataclass(frozen=True, eq=False)
class DigitalSubcarrier:
    """Complex waveform at the decimated processing rate."""

    samples: np.ndarray
    rate: float
    nominal_offset: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not (self.rate > 0):
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class AlignmentResult:
    """Interferometer settings found by the feedback optimizer."""

    theta: float
    tau: float
    amp_scale: float
    residual_db: float


def tap(field: OpticalField, ratio: float) -> tuple[OpticalField, OpticalField]:
    """Power splitter: returns (through, tapped) carrying (1-ratio, ratio)."""
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"tap ratio must be in (0, 1), got {ratio}")
    return (
        field.with_samples(np.sqrt(1.0 - ratio) * field.samples),
        field.with_samples(np.sqrt(ratio) * field.samples),
    )


def _decimation_factor(sample_rate: float, processing_rate: float) -> int:
    factor = sample_rate / processing_rate
    if abs(factor - round(factor)) > 1e-9 or factor < 1:
        raise RateMismatchError(
            f"processing rate {processing_rate:.6g} Hz must divide the grid rate "
            f"{sample_rate:.6g} Hz"
        )
    return int(round(factor))


def _lo_phasor(lo_source: OpticalField, lo_offset: float, width: float) -> np.ndarray:
    """Unit-magnitude local-oscillator waveform extracted from a comb field.

    The line at ``lo_offset`` is isolated and normalized sample-wise, so the
    mixer reference carries the line's full phase trajectory (including any
    laser phase noise) at unit amplitude.
    """
    spec = spectrum(lo_source)
    window = np.abs(spec.bin_offsets - lo_offset) <= width / 2.0
    if not np.any(window):
        raise CombLineAbsentError(f"comb line absent at offset {lo_offset:.6g} Hz")
    powers = spec.bin_powers_w()
    w_powers = powers[window]
    peak_bin = int(np.argmax(w_powers))
    if (
        abs(float(spec.bin_offsets[window][peak_bin]) - lo_offset)
        > spec.resolution_bandwidth
        or w_powers[peak_bin] < np.max(powers) * 1e-4
    ):
        raise CombLineAbsentError(f"comb line absent at offset {lo_offset:.6g} Hz")
    line = bandpass(lo_source, lo_offset, width).samples
    mag = np.abs(line)
    if np.min(mag) <= 0.0:
        raise CombLineAbsentError(
            f"local oscillator at {lo_offset:.6g} Hz has zero-amplitude samples"
        )
    return line / mag


def coherent_drop(
    tapped: OpticalField, cfg: AddDropConfig, lo: OpticalField | None = None
) -> DigitalSubcarrier:
    """Coherently convert the dropped subcarrier into the digital domain.

    The tapped field is mixed with the conjugate local oscillator (a comb
    line from ``lo``, or an ideal unit phasor at ``lo_offset`` when ``lo`` is
    None), low-pass filtered at the processing bandwidth, and decimated to
    the processing rate. The result is the dropped subcarrier referenced to
    ``target_offset - lo_offset``, with the LO phase removed.
    """
    fs = tapped.sample_rate
    factor = _decimation_factor(fs, cfg.processing_rate)
    if lo is None:
        t = np.arange(len(tapped)) / fs
        ref = np.exp(2j * np.pi * cfg.lo_offset * t)
    else:
        if lo.sample_rate != fs or len(lo) != len(tapped):
            raise GridMismatchError("grid mismatch: LO source and tapped field")
        ref = _lo_phasor(lo, cfg.lo_offset, cfg.processing_bandwidth)
    mixed = tapped.samples * np.conj(ref)
    filtered = apply_band_filter(mixed, fs, 0.0, 2.0 * cfg.processing_bandwidth)
    return DigitalSubcarrier(
        filtered[::factor], cfg.processing_rate, cfg.digital_offset
    )


def prepare_add(
    add_bits: BitStream,
    cfg: AddDropConfig,
    plan: SubcarrierPlan,
    grid,
) -> DigitalSubcarrier:
    """Modulate the add bit stream into a waveform matching the dropped one.

    The chain mirrors the transmitter and drop path exactly: NRZ modulation
    on the optical grid, frequency shift to the digital offset
    ``target_offset - lo_offset``, the transmitter's slot confinement, the
    processing low-pass, and decimation. An equal-bit add therefore
    reproduces the noiseless dropped waveform up to one complex scale.
    """
    factor = _decimation_factor(grid.sample_rate, cfg.processing_rate)
    wave = modulate_subcarrier(add_bits, plan.bit_rate, grid)
    delta = cfg.digital_offset
    if delta != 0.0:
        t = grid.times()
        wave = wave * np.exp(2j * np.pi * delta * t)
    confined = apply_band_filter(wave, grid.sample_rate, delta, plan.slot_width)
    filtered = apply_band_filter(
        confined, grid.sample_rate, 0.0, 2.0 * cfg.processing_bandwidth
    )
    return DigitalSubcarrier(filtered[::factor], cfg.processing_rate, delta)


def difference(s_h: DigitalSubcarrier, s_l: DigitalSubcarrier) -> DigitalSubcarrier:
    """Sample-wise difference of the dropped and add waveforms."""
    if s_h.rate != s_l.rate or len(s_h) != len(s_l):
        raise GridMismatchError("grid mismatch: digital subcarriers")
    return DigitalSubcarrier(
        s_h.samples - s_l.samples, s_h.rate, s_h.nominal_offset
    )


def _upsample(samples: np.ndarray, factor: int) -> np.ndarray:
    """Exact band-limited upsampling by zero-padding the spectrum."""
    n = samples.size
    if factor == 1:
        return np.asarray(samples, dtype=np.complex128)
    spec = np.fft.fft(samples)
    out = np.zeros(n * factor, dtype=np.complex128)
    half = n // 2
    out[:half] = spec[:half]
    out[-(n - half):] = spec[half:]
    return np.fft.ifft(out) * factor


def remodulate_and_combine(
    through: OpticalField,
    s_hl: DigitalSubcarrier,
    carrier: OpticalField,
    cfg: AddDropConfig,
) -> OpticalField:
    """Modulate the difference waveform onto the tapped comb line and
    superimpose it onto the through path.

    The digital record is upsampled back to the optical grid, multiplied by
    the unit-amplitude carrier line (placing its content at the target
    optical offset), scaled by ``amp_scale``, rotated by ``theta``, delayed
    by ``tau``, and combined with the through path in the output coupler.
    Returns the coupler output port; the deterministic tap and coupler
    scaling is left to the caller.
    """
    fs = through.sample_rate
    factor = _decimation_factor(fs, cfg.processing_rate)
    if len(s_hl) * factor != len(through):
        raise GridMismatchError("grid mismatch: digital record does not span the field")
    ref = _lo_phasor(carrier, cfg.lo_offset, cfg.processing_bandwidth)
    lower = ref * _upsample(s_hl.samples, factor)
    lower = lower * (cfg.amp_scale * np.exp(1j * cfg.theta))
    lower_field = through.with_samples(lower)
    if cfg.tau != 0.0:
        lower_field = field_delay(lower_field, cfg.tau)
    out, _ = couple_2x2(through, lower_field, OUTPUT_COUPLER_RATIO)
    return out


def node_gain(cfg: AddDropConfig) -> float:
    """Deterministic amplitude scale of the through path across the node."""
    return float(np.sqrt(1.0 - cfg.tap_ratio) * np.sqrt(OUTPUT_COUPLER_RATIO))


def add_drop(
    input_field: OpticalField,
    comb: OpticalField,
    cfg: AddDropConfig,
    add_bits: BitStream,
    plan: SubcarrierPlan,
) -> OpticalField:
    """Full add/drop composition: tap, coherent drop, add preparation,
    difference, re-modulation, interferometric recombination.

    The add waveform is matched to the dropped subcarrier in amplitude and
    carrier phase through the ratio of their carrier-frequency components,
    so the replacement inherits the incumbent's level and the equal-bit case
    degenerates to an exact pass-through. The output is rescaled by the
    inverse of the deterministic through-path attenuation, so with the
    interferometer aligned the untouched subcarriers leave at their input
    amplitudes.
    """
    through, tapped = tap(input_field, cfg.tap_ratio)
    s_h = coherent_drop(tapped, cfg, lo=comb)
    s_l = prepare_add(add_bits, cfg, plan, input_field.grid)
    scale = _carrier_ratio(s_h, s_l)
    s_l = DigitalSubcarrier(s_l.samples * scale, s_l.rate, s_l.nominal_offset)
    s_hl = difference(s_h, s_l)
    combined = remodulate_and_combine(through, s_hl, comb, cfg)
    return combined.with_samples(combined.samples / node_gain(cfg))


def _carrier_ratio(s_h: DigitalSubcarrier, s_l: DigitalSubcarrier) -> complex:
    """Complex ratio of the carrier (DC) components of two digital records.

    Both waveforms are OOK with a strong carrier at the nominal offset, so
    the ratio sets the scale and phase that line the add waveform up with
    the incumbent, independent of the bit patterns.
    """
    if s_h.rate != s_l.rate or len(s_h) != len(s_l):
        raise GridMismatchError("grid mismatch: digital subcarriers")
    t = np.arange(len(s_h)) / s_h.rate
    rot = np.exp(-2j * np.pi * s_h.nominal_offset * t)
    dc_h = complex(np.mean(s_h.samples * rot))
    dc_l = complex(np.mean(s_l.samples * rot))
    if abs(dc_l) == 0.0:
        raise SignalPowerError("add waveform has no carrier component to match")
    return dc_h / dc_l


def cancellation_residual_db(
    input_field: OpticalField,
    comb: OpticalField,
    cfg: AddDropConfig,
    plan: SubcarrierPlan,
) -> float:
    """Residual incumbent power after cancellation, via the full composition.

    Runs the probe configuration (zero add stream, so the difference signal
    is the dropped waveform itself) through tap, coherent drop, re-modulation
    and the output coupler at the settings in ``cfg``, and measures the power
    left in the dropped subcarrier's band relative to the through path's
    incumbent power in that band. 0 dB means no cancellation at all.
    """
    through, tapped = tap(input_field, cfg.tap_ratio)
    s_h = coherent_drop(tapped, cfg, lo=comb)
    combined = remodulate_and_combine(through, s_h, comb, cfg)
    band = plan.spacing
    residual = bandpass(combined, cfg.target_offset, band)
    reference, _ = couple_2x2(
        through, through.with_samples(np.zeros(len(through), dtype=np.complex128)),
        OUTPUT_COUPLER_RATIO,
    )
    ref_band = bandpass(reference, cfg.target_offset, band)
    p_res = float(np.mean(np.abs(residual.samples) ** 2))
    p_ref = float(np.mean(np.abs(ref_band.samples) ** 2))
    if p_ref <= 0:
        raise SignalPowerError("no incumbent power in the dropped band")
    return 10.0 * float(np.log10(max(p_res, 1e-300) / p_ref))


def align_interferometer(
    input_field: OpticalField,
    comb: OpticalField,
    cfg: AddDropConfig,
    plan: SubcarrierPlan,
) -> AlignmentResult:
    """Find interferometer settings that cancel the incumbent subcarrier.

    Uses the pure cancellation probe (zero add stream) and minimizes the
    residual incumbent power in the dropped band over the phase and delay,
    solving the lower-path amplitude scale by least squares at every
    candidate. The search is a coarse grid (64 phase points over 2*pi; delay
    within +-2 bit periods of the configured value in 1/8-bit steps)
    followed by three rounds of golden-section refinement on each
    coordinate. Ties break toward the smaller phase, then the smaller delay.

    Raises AlignmentError when the best residual stays above -3 dB, meaning
    cancellation effectively failed.
    """
    through, tapped = tap(input_field, cfg.tap_ratio)
    s_h = coherent_drop(tapped, cfg, lo=comb)
    fs = input_field.sample_rate
    factor = _decimation_factor(fs, cfg.processing_rate)
    ref = _lo_phasor(comb, cfg.lo_offset, cfg.processing_bandwidth)
    lower_unit = ref * _upsample(s_h.samples, factor)

    n = len(input_field)
    freqs = np.fft.fftfreq(n, d=1.0 / fs)
    h_band = band_response(freqs, cfg.target_offset, plan.spacing)
    mask = h_band > 0.0
    t_band = np.fft.fft(through.samples)[mask] * h_band[mask]
    l_band = np.fft.fft(lower_unit)[mask] * h_band[mask]
    f_band = freqs[mask]
    coupler = np.sqrt(OUTPUT_COUPLER_RATIO)
    cross = 1j * np.sqrt(1.0 - OUTPUT_COUPLER_RATIO)
    p_ref = float(np.sum(np.abs(coupler * t_band) ** 2))
    if p_ref <= 0:
        raise SignalPowerError("no incumbent power in the dropped band")
    l_norm = float(np.sum(np.abs(cross * l_band) ** 2))

    def objective(theta: float, tau: float) -> tuple[float, float]:
        """(residual power ratio, least-squares amplitude) at (theta, tau)."""
        v = (cross * np.exp(1j * theta)) * l_band * np.exp(-2j * np.pi * f_band * tau)
        s = -float(np.real(np.vdot(v, coupler * t_band))) / l_norm
        s = max(s, 0.0)
        res = coupler * t_band + s * v
        return float(np.sum(np.abs(res) ** 2)) / p_ref, s

    bit_period = 1.0 / plan.bit_rate
    thetas = np.arange(64) * (2.0 * np.pi / 64.0)
    taus = cfg.tau + np.arange(-16, 17) * (bit_period / 8.0)
    best = (np.inf, 0.0, 0.0, 0.0)  # (residual, theta, tau, scale)
    for theta in thetas:
        for tau in taus:
            r, s = objective(theta, tau)
            if r < best[0] - 1e-15:
                best = (r, theta, tau, s)

    theta_step = 2.0 * np.pi / 64.0
    tau_step = bit_period / 8.0
    _, theta_best, tau_best, scale_best = best
    for _ in range(3):
        theta_best = _golden_section(
            lambda th: objective(th, tau_best)[0],
            theta_best - theta_step,
            theta_best + theta_step,
        )
        tau_best = _golden_section(
            lambda ta: objective(theta_best, ta)[0],
            tau_best - tau_step,
            tau_best + tau_step,
        )
        theta_step /= 8.0
        tau_step /= 8.0
    r_best, scale_best = objective(theta_best, tau_best)

    theta_best = float(np.mod(theta_best, 2.0 * np.pi))
    residual_db = 10.0 * float(np.log10(max(r_best, 1e-300)))
    if residual_db > -3.0:
        raise AlignmentError(
            f"alignment failed: residual {residual_db:.2f} dB is less than 3 dB "
            "below the uncancelled incumbent"
        )
    return AlignmentResult(theta_best, float(tau_best), float(scale_best), residual_db)


def _golden_section(fun, lo: float, hi: float, iterations: int = 28) -> float:
    """Golden-section minimizer on [lo, hi] with a fixed iteration budget."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iterations):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def aligned_config(
    input_field: OpticalField,
    comb: OpticalField,
    cfg: AddDropConfig,
    plan: SubcarrierPlan,
) -> tuple[AddDropConfig, AlignmentResult]:
    """Convenience: run the alignment and fold the result into the config."""
    result = align_interferometer(input_field, comb, cfg, plan)
    return (
        replace(cfg, theta=result.theta, tau=result.tau, amp_scale=result.amp_scale),
        result,
    )


def write_alignment_csv(results, path) -> None:
    """Export alignment results as ``theta_rad,tau_s,amp_scale,residual_db``."""
    if isinstance(results, AlignmentResult):
        results = [results]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_rad", "tau_s", "amp_scale", "residual_db"])
        for r in results:
            writer.writerow(
                [
                    f"{r.theta:.12g}",
                    f"{r.tau:.12g}",
                    f"{r.amp_scale:.12g}",
                    f"{r.residual_db:.12g}",
                ]
            )
