"""Duotensor calculus for circuits in classical and quantum theories."""

from .circuit import (
    ClosureKind,
    Foliation,
    Fragment,
    FragmentBuilder,
    OperationSpec,
    Port,
    ValidationReport,
    Wire,
    close_all,
    close_ports,
    compose,
    foliate,
    foliation_problems,
    validate,
)
from .completion import completion_ratio_oracle
from .dot import export_dot
from .dsl import format, parse
from .duotensor import (
    Color,
    Direction,
    Duotensor,
    IndexMeta,
    Proportionality,
    ProportionalityResult,
    contract,
    identity_delta,
    linear_combine,
    outer,
    proportionality,
    recolor,
    recolor_all,
    to_all_black,
    to_standard_form,
)
from .backends import oracle_probability
from .engine import (
    CompiledFragment,
    ContractionPlan,
    RatioVerdict,
    Verdict,
    circuit_probability,
    compile_fragment,
    contract_compiled,
    evolve_foliation,
    plan_contraction,
    ratio_check,
)
from .errors import DuocalcError
from .io import circuit_from_json, circuit_to_json, load_theory, theory_from_json, theory_to_json
from .theory import (
    CompositeType,
    FiducialSet,
    FiducialTransform,
    HoppingMetric,
    SystemType,
    Theory,
    change_fiducials,
    compute_hopping_metric,
    register_type,
    transform_duotensor,
    transform_to_fiducials,
)

__version__ = "0.1.0"
