"""Run configuration: YAML parsing into the component dataclasses.

Every reader reports the full key path of a missing or malformed entry so a
bad config fails with an actionable message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .comb import DdmzmConfig, LaserConfig, PhaseModulatorConfig, SineDrive
from .errors import ConfigError
from .fields import SimGrid
from .node import AddDropConfig
from .transceiver import RxConfig, SubcarrierPlan

SCENARIOS = ("comb", "b2b-sweep", "adddrop", "spectrum")


@dataclass(frozen=True)
class OsnrSettings:
    reference_bandwidth: float = 12.5e9
    position: str = "post_tx"  # post_tx | post_node

    def __post_init__(self):
        if self.position not in ("post_tx", "post_node"):
            raise ConfigError(f"osnr.position must be post_tx or post_node, got {self.position}")


@dataclass(frozen=True)
class RunConfig:
    """Everything one scenario run needs, resolved and validated."""

    scenario: str
    root_seed: int
    grid: SimGrid
    laser: LaserConfig
    pm_cfg: PhaseModulatorConfig
    pm_drive: SineDrive
    mzm_cfg: DdmzmConfig
    mzm_drive_1: SineDrive
    mzm_drive_2: SineDrive
    amp_gain_db: float
    plan: SubcarrierPlan
    prbs_order: int
    rx: RxConfig
    node: AddDropConfig
    node_align: str  # auto | fixed
    osnr: OsnrSettings
    sweep: tuple[float, ...]
    blocks: int
    spectrum_rbw: float

    @property
    def superchannel_center(self) -> float:
        """Absolute reference frequency of the superchannel envelope.

        With an even subcarrier count the plan offsets are half-integer
        multiples of the spacing, so the reference sits half a spacing above
        the seed laser and the comb lines land exactly on the plan offsets.
        """
        shift = self.plan.spacing / 2.0 if self.plan.count % 2 == 0 else 0.0
        return self.laser.frequency + shift

    def bits_per_record(self) -> int:
        return int(self.grid.n_samples / (self.grid.sample_rate / self.plan.bit_rate))


_sentinel = object()


def _get(mapping, path: str, default=_sentinel):
    node = mapping
    walked = []
    for part in path.split("."):
        walked.append(part)
        if not isinstance(node, dict) or part not in node:
            if default is not _sentinel:
                return default
            raise ConfigError(f"missing config key: {'.'.join(walked)}")
        node = node[part]
    return node


def _number(mapping, path: str, default=_sentinel, allow_inf: bool = False) -> float:
    raw = _get(mapping, path, default)
    if raw is None and default is not _sentinel:
        return default
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {path} must be a number, got {raw!r}") from None
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ConfigError(f"config key {path} must be finite, got {raw!r}")
    return value


def _integer(mapping, path: str, default=_sentinel) -> int:
    value = _number(mapping, path, default)
    if value != int(value):
        raise ConfigError(f"config key {path} must be an integer, got {value!r}")
    return int(value)


def _drive(mapping, path: str, default_phase: float) -> SineDrive:
    try:
        return SineDrive(
            frequency=_number(mapping, f"{path}.freq_hz"),
            amplitude=_number(mapping, f"{path}.amplitude_v"),
            phase=_number(mapping, f"{path}.phase_rad", default_phase),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config section {path}: {exc}") from exc


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a YAML run config; ``None`` loads the packaged default."""
    if path is None:
        text = resources.files("roadmsim").joinpath("data/default.yaml").read_text()
    else:
        text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    scenario = _get(raw, "scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")

    try:
        grid = SimGrid(
            sample_rate=_number(raw, "grid.sample_rate_hz"),
            n_samples=_integer(raw, "grid.n_samples"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config section grid: {exc}") from exc

    try:
        laser = LaserConfig(
            frequency=_number(raw, "laser.frequency_hz"),
            power=_number(raw, "laser.power_w"),
            linewidth=_number(raw, "laser.linewidth_hz", 0.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config section laser: {exc}") from exc

    try:
        pm_cfg = PhaseModulatorConfig(v_pi=_number(raw, "pm.vpi"))
        mzm_cfg = DdmzmConfig(
            v_pi=_number(raw, "mzm.vpi"),
            bias_1=_number(raw, "mzm.bias1_v"),
            bias_2=_number(raw, "mzm.bias2_v"),
            gamma=_number(raw, "mzm.gamma"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config section pm/mzm: {exc}") from exc

    pm_drive = _drive(raw, "pm.drive", default_phase=np.pi / 2)
    mzm_drive_1 = _drive(raw, "mzm.drive1", default_phase=0.0)
    mzm_drive_2 = _drive(raw, "mzm.drive2", default_phase=0.0)

    try:
        plan = SubcarrierPlan(
            count=_integer(raw, "plan.count", 4),
            spacing=_number(raw, "plan.spacing_hz", 50e9),
            bit_rate=_number(raw, "plan.bit_rate", 25e9),
            slot_width=_number(raw, "plan.slot_width_hz", 40e9),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config section plan: {exc}") from exc
    occupied = (plan.count - 1) * plan.spacing + plan.slot_width
    if occupied >= grid.sample_rate:
        raise ConfigError(
            f"plan occupies {occupied:.6g} Hz but the grid supports only "
            f"{grid.sample_rate:.6g} Hz"
        )

    ebw = _get(raw, "rx.electrical_bw_hz", None)
    try:
        rx = RxConfig(
            responsivity=_number(raw, "rx.responsivity", 0.7),
            electrical_bandwidth=None if ebw is None else _number(raw, "rx.electrical_bw_hz"),
            discard_bits=_integer(raw, "rx.discard_bits", 64),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config section rx: {exc}") from exc

    drop_index = _integer(raw, "node.drop_index", 1)
    if not (0 <= drop_index < plan.count):
        raise ConfigError(
            f"node.drop_index {drop_index} outside the plan of {plan.count} subcarriers"
        )
    # Absent offsets default to the dropped subcarrier's own comb line.
    drop_offset = float(plan.offsets()[drop_index])
    try:
        node = AddDropConfig(
            drop_index=drop_index,
            lo_offset=_number(raw, "node.lo_offset_hz", drop_offset),
            target_offset=_number(raw, "node.target_offset_hz", drop_offset),
            tap_ratio=_number(raw, "node.tap_ratio", 0.5),
            theta=_number(raw, "node.theta_rad", 0.0),
            tau=_number(raw, "node.tau_s", 0.0),
            amp_scale=_number(raw, "node.amp_scale", 1.0),
            processing_bandwidth=_number(raw, "node.processing_bw_hz", 24e9),
            processing_rate=_number(raw, "node.processing_rate_hz", 100e9),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config section node: {exc}") from exc
    node_align = _get(raw, "node.align", "auto")
    if node_align not in ("auto", "fixed"):
        raise ConfigError(f"node.align must be auto or fixed, got {node_align!r}")

    osnr = OsnrSettings(
        reference_bandwidth=_number(raw, "osnr.ref_bw_hz", 12.5e9),
        position=_get(raw, "osnr.position", "post_tx"),
    )

    sweep_raw = _get(raw, "sweep", None)
    if sweep_raw is None:
        sweep_raw = [_number(raw, "osnr.target_db", allow_inf=True)]
    if not isinstance(sweep_raw, (list, tuple)) or not sweep_raw:
        raise ConfigError("sweep must be a non-empty list of OSNR targets in dB")
    sweep = []
    for i, v in enumerate(sweep_raw):
        try:
            x = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"sweep[{i}] must be a number, got {v!r}") from None
        if math.isnan(x):
            raise ConfigError(f"sweep[{i}] must not be NaN")
        sweep.append(x)

    prbs_order = _integer(raw, "plan.prbs_order", 7)
    blocks = _integer(raw, "blocks", 4)
    if blocks < 1:
        raise ConfigError(f"blocks must be >= 1, got {blocks}")
    spectrum_rbw = _number(raw, "spectrum.rbw_hz", 1e9)

    bits = grid.n_samples / (grid.sample_rate / plan.bit_rate)
    if bits != int(bits):
        raise ConfigError(
            "grid.n_samples must hold a whole number of bits at plan.bit_rate"
        )
    if 2 * rx.discard_bits >= int(bits):
        raise ConfigError(
            f"rx.discard_bits {rx.discard_bits} leaves no decisions in a "
            f"{int(bits)}-bit record"
        )

    return RunConfig(
        scenario=scenario,
        root_seed=_integer(raw, "root_seed", 0),
        grid=grid,
        laser=laser,
        pm_cfg=pm_cfg,
        pm_drive=pm_drive,
        mzm_cfg=mzm_cfg,
        mzm_drive_1=mzm_drive_1,
        mzm_drive_2=mzm_drive_2,
        amp_gain_db=_number(raw, "amp.gain_db", 0.0),
        plan=plan,
        prbs_order=prbs_order,
        rx=rx,
        node=node,
        node_align=node_align,
        osnr=osnr,
        sweep=tuple(sweep),
        blocks=blocks,
        spectrum_rbw=spectrum_rbw,
    )
