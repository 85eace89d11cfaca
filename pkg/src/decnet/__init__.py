"""Influence diagrams solved through belief-network inference."""

__version__ = "0.1.0"

from .decide import (DecisionOutcome, MemoTable, Policy, extract_policy, mev, mev_recursive,
                     mev_single, prepare_decision, query_count_report)
from .errors import (DecnetError, EvidenceError, ImpossibleEvidenceError, NoAcceptedSamplesError,
                     ParseError, StructureError, UsageError)
from .exact import (Factor, QueryResult, joint_config_probability, prune_barren, query_enumeration,
                    query_ve)
from .model import (BeliefNetwork, ChanceNode, DecisionNode, InfluenceDiagram, ValueNode,
                    topological_order, validate_bn, validate_id)
from .oracle import oracle_decision_tree
from .sampling import EstimateWithSE, logic_sample, sample_decide
from .textformat import parse_document, serialize_document
from .transform import (CompiledDecisionProblem, DecisionEntry, build_decision_list, id_to_bn,
                        no_forgetting_closure, value_to_probability)

__all__ = [
    "BeliefNetwork", "ChanceNode", "CompiledDecisionProblem", "DecisionEntry", "DecisionNode",
    "DecisionOutcome", "DecnetError", "EstimateWithSE", "EvidenceError", "Factor",
    "ImpossibleEvidenceError", "InfluenceDiagram", "MemoTable", "NoAcceptedSamplesError",
    "ParseError", "Policy", "QueryResult", "StructureError", "UsageError", "ValueNode",
    "build_decision_list", "extract_policy", "id_to_bn", "joint_config_probability", "logic_sample",
    "mev", "mev_recursive", "mev_single", "no_forgetting_closure", "oracle_decision_tree",
    "parse_document", "prepare_decision", "prune_barren", "query_count_report",
    "query_enumeration", "query_ve", "sample_decide", "serialize_document", "topological_order",
    "validate_bn", "validate_id", "value_to_probability",
]
