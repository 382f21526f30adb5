"""End-to-end QoS prediction over multi-domain logistics networks."""

from piqos.calculus import ComposedValues, DecisionVector, compose_path, extract_decision_vector, std_normal_cdf
from piqos.command import Constraint, Objective, Op, QosCommand, check_constraints, parse_command, render_command, score
from piqos.errors import QosError
from piqos.model import (
    Composition,
    DomainGraph,
    Extraction,
    Normal,
    ParameterDecl,
    ParameterSchema,
    Scalar,
    Sense,
    SlaOffering,
    dominance_key,
    pareto_dominates,
)
from piqos.processor import PathCandidate, QosCache, Query, RankedResult, enumerate_candidates, enumerate_paths, rank
from piqos.registry import Registry, RegistrySnapshot, load_registry, save_registry

__version__ = "0.1.0"
