"""Time-Space Priority buffer management with Iub flow control for HSDPA."""

from .engine import MetricsReport, SimConfig, Simulator, run, run_replications
from .flow_control import CapacityGrant, FlowControlParams, FlowController, Level
from .pdu import PDU_BITS, Flow, Pdu
from .tsp_buffer import Admission, TspBuffer, TspBufferConfig, Variant

__all__ = [
    "Admission", "CapacityGrant", "Flow", "FlowControlParams", "FlowController", "Level",
    "MetricsReport", "PDU_BITS", "Pdu", "SimConfig", "Simulator", "TspBuffer", "TspBufferConfig",
    "Variant", "run", "run_replications",
]
