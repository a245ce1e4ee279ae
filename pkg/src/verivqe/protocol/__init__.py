from .messages import SERVER_VISIBLE_SCHEMA, encode_frame, decode_frame
from .parties import RefereeParty, ServerParty
from .transport import (
    InprocTransport,
    TcpTransport,
    serve_referee,
    serve_server,
    split_party_seeds,
)
from .step import StepOutcome, StepProblem, build_schedule, run_step
from .descent import RunConfig, RunTranscript, StepLog, convergence_check, run_vqa

__all__ = [
    "SERVER_VISIBLE_SCHEMA",
    "encode_frame",
    "decode_frame",
    "RefereeParty",
    "ServerParty",
    "InprocTransport",
    "TcpTransport",
    "serve_referee",
    "serve_server",
    "split_party_seeds",
    "StepOutcome",
    "StepProblem",
    "build_schedule",
    "run_step",
    "RunConfig",
    "RunTranscript",
    "StepLog",
    "convergence_check",
    "run_vqa",
]
