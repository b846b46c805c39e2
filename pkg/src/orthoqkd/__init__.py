"""Simulator for relativistic orthogonal-state quantum key distribution over 2**k path modes."""

__version__ = "0.1.0"

from .optics import (  # noqa: E402
    JointState,
    ModeUnitary,
    PhotonState,
    apply_beamsplitter,
    apply_joint_unitary,
    apply_phase,
    butterfly_transform,
    measure_path,
    tensor_with_ancilla,
)
from .protocol import alice_prepare, alice_verify, bob_decode, bob_disclose, outcome_to_branch_detector  # noqa: E402
from .timing import TimingConfig, build_schedule, causal_window, check_arrival, interlace_schedule  # noqa: E402
from .adversary import (  # noqa: E402
    CausalAncillaUnitary,
    FullStateMeasureResend,
    NoAttack,
    PathMeasureResend,
    apply_attack,
    detection_probability_oracle,
    eve_information,
)
from .config import SessionConfig, load_config, parse_config  # noqa: E402
from .session import run_session  # noqa: E402
