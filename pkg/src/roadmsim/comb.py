"""Optical comb generation: seed laser, sine drives, phase modulator, and
dual-drive Mach-Zehnder modulator, chained into a single-pass comb source.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    AliasingError,
    CombLineAbsentError,
    IncoherentDrivesError,
    InsufficientRecordError,
)
from .fields import OpticalField, SimGrid, Spectrum, spectrum, watt_to_dbm

DEFAULT_LASER_FREQUENCY = 193.1e12

# Relative floor below the strongest line; weaker bins are not reported as lines.
LINE_FLOOR_DB = 40.0


@dataclass(frozen=True)
class LaserConfig:
    """Continuous-wave seed laser."""

    frequency: float = DEFAULT_LASER_FREQUENCY
    power: float = 1e-3
    linewidth: float = 0.0  # Lorentzian FWHM in Hz; 0 = ideal

    def __post_init__(self):
        if not (self.power > 0):
            raise ValueError(f"laser power must be positive, got {self.power}")
        if self.linewidth < 0:
            raise ValueError(f"laser linewidth must be >= 0, got {self.linewidth}")


@dataclass(frozen=True)
class SineDrive:
    """Sinusoidal electrical drive v(t) = amplitude * sin(2*pi*f*t + phase)."""

    frequency: float
    amplitude: float
    phase: float = np.pi / 2

    def __post_init__(self):
        if not (self.frequency > 0):
            raise ValueError(f"drive frequency must be positive, got {self.frequency}")
        if self.amplitude < 0:
            raise ValueError(f"drive amplitude must be >= 0, got {self.amplitude}")

    def waveform(self, t: np.ndarray) -> np.ndarray:
        return self.amplitude * np.sin(2.0 * np.pi * self.frequency * t + self.phase)


@dataclass(frozen=True)
class PhaseModulatorConfig:
    v_pi: float = 4.0

    def __post_init__(self):
        if not (self.v_pi > 0):
            raise ValueError(f"v_pi must be positive, got {self.v_pi}")


@dataclass(frozen=True)
class DdmzmConfig:
    """Dual-drive MZM: per-arm bias and input power splitting ratio gamma."""

    v_pi: float = 4.0
    bias_1: float = 0.0
    bias_2: float = 0.0
    gamma: float = 0.5  # fraction of input power routed to arm 1

    def __post_init__(self):
        if not (self.v_pi > 0):
            raise ValueError(f"v_pi must be positive, got {self.v_pi}")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class CombReport:
    """Detected comb lines: (offset_hz, power_dbm) sorted by offset."""

    lines: tuple[tuple[float, float], ...]
    spacing: float

    @property
    def line_count(self) -> int:
        return len(self.lines)

    def peak_power_dbm(self) -> float:
        return max(p for _, p in self.lines)

    def line_count_within(self, window_db: float) -> int:
        """Number of lines within ``window_db`` of the strongest line."""
        peak = self.peak_power_dbm()
        return sum(1 for _, p in self.lines if p >= peak - window_db)

    def flatness(self, n_central: int) -> float:
        """dB spread (max - min) over the ``n_central`` lines nearest zero offset."""
        if n_central < 1 or n_central > len(self.lines):
            raise ValueError(f"n_central must be in [1, {len(self.lines)}]")
        central = sorted(self.lines, key=lambda lp: abs(lp[0]))[:n_central]
        powers = [p for _, p in central]
        return max(powers) - min(powers)

    def power_at(self, offset: float, tolerance: float) -> float:
        """Power in dBm of the line nearest ``offset``; raises if none is close."""
        best = min(self.lines, key=lambda lp: abs(lp[0] - offset), default=None)
        if best is None or abs(best[0] - offset) > tolerance:
            raise CombLineAbsentError(
                f"comb line absent at offset {offset:.6g} Hz (tolerance {tolerance:.6g})"
            )
        return best[1]


def cw_laser(cfg: LaserConfig, grid: SimGrid, seed: int | None = None) -> OpticalField:
    """Constant-amplitude field sqrt(P)*exp(j*phi(t)).

    ``phi`` is a Wiener process with variance rate ``2*pi*linewidth``, which
    gives a Lorentzian line of that FWHM; linewidth 0 gives a pure tone.
    Identical seeds give identical fields.
    """
    amp = np.sqrt(cfg.power)
    if cfg.linewidth > 0:
        rng = np.random.default_rng(seed)
        dphi = rng.normal(
            0.0, np.sqrt(2.0 * np.pi * cfg.linewidth * grid.dt), size=grid.n_samples
        )
        phi = np.cumsum(dphi) - dphi[0]
        samples = amp * np.exp(1j * phi)
    else:
        samples = np.full(grid.n_samples, amp, dtype=np.complex128)
    return OpticalField(samples, grid.sample_rate, cfg.frequency)


def electrical_amplify(drive: SineDrive, gain_db: float) -> SineDrive:
    """Scale the drive amplitude by 10^(gain_db/20); frequency and phase stay."""
    if not np.isfinite(gain_db):
        raise ValueError(f"gain must be finite, got {gain_db}")
    return replace(drive, amplitude=drive.amplitude * 10.0 ** (gain_db / 20.0))


def phase_modulate(
    field: OpticalField, drive: SineDrive, cfg: PhaseModulatorConfig
) -> OpticalField:
    """Multiply the field by exp(j*pi*v(t)/v_pi); power is conserved exactly."""
    _check_drive_nyquist(field, drive)
    t = np.arange(len(field)) / field.sample_rate
    phase = np.pi * drive.waveform(t) / cfg.v_pi
    return field.with_samples(field.samples * np.exp(1j * phase))


def ddmzm(
    field: OpticalField, drive_1: SineDrive, drive_2: SineDrive, cfg: DdmzmConfig
) -> OpticalField:
    """Dual-drive MZM transfer.

    The input splits with amplitude weights sqrt(gamma), sqrt(1-gamma); each
    arm applies exp(j*pi*(v_i(t) + bias_i)/v_pi); the output combiner adds the
    arms with amplitude 1/sqrt(2) each. At gamma = 0.5 with equal arm phases
    the device is lossless (output equals input); for any other setting the
    output power is strictly below the input power.
    """
    _check_drive_nyquist(field, drive_1)
    _check_drive_nyquist(field, drive_2)
    t = np.arange(len(field)) / field.sample_rate
    arm1 = np.sqrt(cfg.gamma) * np.exp(
        1j * np.pi * (drive_1.waveform(t) + cfg.bias_1) / cfg.v_pi
    )
    arm2 = np.sqrt(1.0 - cfg.gamma) * np.exp(
        1j * np.pi * (drive_2.waveform(t) + cfg.bias_2) / cfg.v_pi
    )
    return field.with_samples(field.samples * (arm1 + arm2) / np.sqrt(2.0))


def _check_drive_nyquist(field: OpticalField, drive: SineDrive) -> None:
    if drive.frequency >= field.sample_rate / 2.0:
        raise AliasingError(
            f"aliasing: drive frequency {drive.frequency:.6g} Hz at or above "
            f"Nyquist {field.sample_rate / 2:.6g} Hz"
        )


def generate_comb(
    laser: LaserConfig,
    pm_drive: SineDrive,
    pm_cfg: PhaseModulatorConfig,
    mzm_drives: tuple[SineDrive, SineDrive],
    mzm_cfg: DdmzmConfig,
    grid: SimGrid,
    amp_gain_db: float = 0.0,
    seed: int | None = None,
) -> tuple[OpticalField, CombReport]:
    """Chain laser -> phase modulator -> dual-drive MZM into a comb.

    All drives come from one sine generator boosted by a common electrical
    amplifier, so their frequencies must match; ``amp_gain_db`` scales every
    drive amplitude before it reaches a modulator.
    """
    drive_1, drive_2 = mzm_drives
    freqs = {pm_drive.frequency, drive_1.frequency, drive_2.frequency}
    if len(freqs) != 1:
        raise IncoherentDrivesError(
            f"incoherent drives: frequencies {sorted(freqs)} must be equal"
        )
    pm_drive = electrical_amplify(pm_drive, amp_gain_db)
    drive_1 = electrical_amplify(drive_1, amp_gain_db)
    drive_2 = electrical_amplify(drive_2, amp_gain_db)

    field = cw_laser(laser, grid, seed=seed)
    field = phase_modulate(field, pm_drive, pm_cfg)
    field = ddmzm(field, drive_1, drive_2, mzm_cfg)
    report = detect_comb_lines(spectrum(field), pm_drive.frequency)
    return field, report


def detect_comb_lines(
    spec: Spectrum, spacing: float, floor_db: float = LINE_FLOOR_DB
) -> CombReport:
    """Integrate spectral power in +-spacing/2 windows around each multiple of
    the spacing and report the lines stronger than ``floor_db`` below the peak.

    Each line's offset is the strongest bin inside its window, so reported
    offsets land on multiples of the spacing to within one bin.
    """
    if spacing < 2.0 * spec.resolution_bandwidth:
        raise InsufficientRecordError(
            f"spacing below resolution: {spacing:.6g} Hz needs finer than "
            f"{spec.resolution_bandwidth:.6g} Hz bins"
        )
    offsets = spec.bin_offsets
    powers = spec.bin_powers_w()
    m_lo = int(np.ceil((offsets[0] + spacing / 2.0) / spacing))
    m_hi = int(np.floor((offsets[-1] + spacing / 2.0) / spacing))
    lines = []
    for m in range(m_lo, m_hi + 1):
        mask = np.abs(offsets - m * spacing) < spacing / 2.0
        if not np.any(mask):
            continue
        total = float(np.sum(powers[mask]))
        if total <= 0:
            continue
        peak_bin = int(np.argmax(powers[mask]))
        lines.append((float(offsets[mask][peak_bin]), total))
    if not lines:
        raise CombLineAbsentError("no comb lines found above the detection floor")
    peak = max(p for _, p in lines)
    kept = [
        (off, watt_to_dbm(p)) for off, p in lines if p >= peak * 10 ** (-floor_db / 10.0)
    ]
    kept.sort(key=lambda lp: lp[0])
    return CombReport(tuple(kept), spacing)


def write_comb_csv(report: CombReport, path) -> None:
    """Export comb lines as ``offset_hz,power_dbm`` CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["offset_hz", "power_dbm"])
        for off, p in report.lines:
            writer.writerow([f"{off:.12g}", f"{p:.12g}"])
