"""Joint information/radar transmit beamforming for a downlink ULA system.

Builds the semidefinite relaxations of the two sensing design criteria
(beampattern matching, min weighted beampattern gain), solves them with an
in-package interior-point method, and recovers exact rank-one information
beamformers plus radar waveform factors.
"""

from .channels import ChannelKind, ChannelScenario, condition_normalize, gen_los, gen_rayleigh
from .conic import Criterion, ProblemSpec, Receiver, build, extract
from .model import (
    BeamformingSolution,
    CovarianceSolution,
    DesiredBeampattern,
    PowerMode,
    ReceiverType,
    SensingAngleSet,
    SystemConfig,
    UlaConfig,
    UserChannel,
    beampattern_gain,
    matching_error,
    sinr,
    steering_vector,
    total_power,
)
from .solver import SolverResult, SolverSettings, SolverStatus, solve

__version__ = "0.1.0"
