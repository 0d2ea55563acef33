"""Random-choice solver for two Burgers equations coupled by a periodic
nonlocal kernel, with wave-ledger diagnostics and a characteristic
blow-up experiment."""

from .blowup import BlowupReport, BlowupSignal, detect_blowup
from .config import ConfigError, ExperimentConfig, load_config
from .grid import GridSpec, PeriodicProfile
from .initial import FieldSpec
from .kernel import EntropyWaveSpec, KernelTable, build_kernel_table, convolve
from .ledger import (
    CharacteristicPath,
    decay_report,
    region_ledger,
    split_waves,
    strength_row,
    trace_characteristic,
)
from .oracle import l1_error, oracle_eval, oracle_tv
from .sampling import SamplePlan
from .scheme import (
    CflViolation,
    NonFiniteState,
    RunRecord,
    SchemeConfig,
    growth_envelope_ok,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "BlowupReport",
    "BlowupSignal",
    "CflViolation",
    "CharacteristicPath",
    "ConfigError",
    "EntropyWaveSpec",
    "ExperimentConfig",
    "FieldSpec",
    "GridSpec",
    "KernelTable",
    "NonFiniteState",
    "PeriodicProfile",
    "RunRecord",
    "SamplePlan",
    "SchemeConfig",
    "build_kernel_table",
    "convolve",
    "decay_report",
    "detect_blowup",
    "growth_envelope_ok",
    "l1_error",
    "load_config",
    "oracle_eval",
    "oracle_tv",
    "region_ledger",
    "run",
    "split_waves",
    "strength_row",
    "trace_characteristic",
    "__version__",
]
