"""Quantum reservoir computing on a shot-based statevector simulator."""

__version__ = "0.1.0"

from .circuit import Circuit, CircuitBuilder, Instruction, render_text
from .codec import Alphabet, AngleCodec, SymbolCodec, decode_symbol, encode_angle, encode_basis
from .config import ExperimentConfig, load_config
from .errors import (
    CapacityError,
    ConfigError,
    ContractError,
    DecodeError,
    ExperimentError,
    QRCError,
    QubitIndexError,
    SchemeError,
    ValidationError,
)
from .executor import ShotTable, TrajectoryRun, execute
from .experiment import dump_circuit, run_experiment
from .readout import ReadoutModel, accuracy, fit_ridge, model_predict, mse
from .reservoir import (
    FeatureMatrix,
    Hooks,
    Incremental,
    PredictionRun,
    QReservoir,
    SchemeParams,
    Static,
    predict,
    run_incremental,
    run_static,
)
from .rng import RngStream, derive_seed
from .simcore import (
    StateVector,
    UnitaryMatrix,
    apply_depolarizing,
    apply_unitary,
    born_probabilities,
    haar_random_unitary,
    measure,
    prepare,
    reset,
    zero_state,
)
