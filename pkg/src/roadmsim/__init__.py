"""Complex-baseband simulator of a subcarrier-granular optical add/drop node.

One seed laser drives a phase modulator and a dual-drive Mach-Zehnder into a
frequency comb; four comb lines carry a 100 Gb/s NRZ-OOK superchannel; an
interferometric node drops and replaces one subcarrier coherently; BER vs
OSNR analysis validates the chain end to end.
"""

__version__ = "0.1.0"

from .comb import (
    CombReport,
    DdmzmConfig,
    LaserConfig,
    PhaseModulatorConfig,
    SineDrive,
    cw_laser,
    ddmzm,
    detect_comb_lines,
    electrical_amplify,
    generate_comb,
    phase_modulate,
)
from .config import RunConfig, load_config, parse_config
from .errors import (
    AliasingError,
    AlignmentError,
    CombLineAbsentError,
    ConfigError,
    DegenerateClassesError,
    ExcessiveDelayError,
    GridMismatchError,
    GuardBandError,
    IncoherentDrivesError,
    InsufficientRecordError,
    RateMismatchError,
    SignalPowerError,
    SimulationError,
)
from .fields import (
    OpticalField,
    SimGrid,
    Spectrum,
    average_power,
    bandpass,
    couple_2x2,
    delay,
    frequency_shift,
    read_field,
    recenter,
    spectrum,
    write_field,
)
from .node import (
    AddDropConfig,
    AlignmentResult,
    DigitalSubcarrier,
    add_drop,
    align_interferometer,
    aligned_config,
    cancellation_residual_db,
    coherent_drop,
    difference,
    prepare_add,
    remodulate_and_combine,
    tap,
)
from .noise import OsnrSpec, load_ase, measure_osnr, white_noise
from .transceiver import (
    BerReport,
    BitStream,
    RxConfig,
    SubcarrierPlan,
    ber_count,
    ber_from_q,
    modulate_subcarrier,
    mux_superchannel,
    photodiode,
    prbs,
    q_factor,
    receive_subcarrier,
)
