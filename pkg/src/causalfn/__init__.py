"""causalfn: occurrent-level causal models, the subfunction calculus,
device decomposition, and a deterministic tick simulator."""

from .core import (
    Comparison, Context, Diagnostic, Entity, Equation, EquationTerm, Event,
    Interval, MaintainOccurrent, Model, Parameter, Precondition, Process,
    SourceSpan, State, constitutes, meets, overlaps, validate,
)
from .calculus import (
    ACHIEVES, ALLOWS, DISALLOWS, MAINTAINS, PREVENTS,
    CausalLink, Derivation, achieves_pattern, classify_link, derive_allows,
    derive_disallows, derive_maintain, derive_prevents, interaction_placement,
    make_maintain, recheck, reduce_state_state, validate_chain,
)
from .devices import Device, DeviceTree, check_adjacency, decompose, identify_device
from .sim import Trace, propagate, run, step, trigger_check, verify_trace
from .dsl import parse, parse_file, serialize

__version__ = "0.1.0"
