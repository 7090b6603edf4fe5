"""A workbench for building, curating, and using entity-type taxonomies.

The tree is the core value: immutable, versioned, addressed by label
paths. Around it sit model access (gateway), proposal-based growth
(expansion), rule-generated categories (combination), entity typing
(typing_engine), and the persistence, CLI, and HTTP layers (canonical,
cli, service).
"""

from .canonical import (
    branch_from_obj,
    branch_to_json,
    branch_to_obj,
    document_bytes,
    load_taxonomy,
    save_taxonomy,
)
from .combination import (
    CombinationRule,
    DuplicateGroup,
    MirroredPair,
    RepetitionReport,
    RuleSet,
    VirtualBranch,
    define_rule,
    detect_repetition,
    expand_rule,
    load_rules,
    materialize,
)
from .errors import WorkbenchError
from .gateway import (
    ChatRequest,
    ChatResponse,
    FixtureStep,
    HttpChatBackend,
    ScriptedBackend,
    backend_from_spec,
)
from .expansion import (
    Diagnostic,
    EngineConfig,
    ExpansionEngine,
    ExpansionProposal,
    ExpansionRequest,
    SessionLog,
    ValidationReport,
    VocabularyConstraint,
    apply_proposal,
    diff_branches,
    run_session,
    validate_proposal,
)
from .seeds import default_seed
from .tree import (
    Taxonomy,
    TaxonomyStats,
    TypeNode,
    TypePath,
    ancestors,
    branch,
    compute_stats,
    create_taxonomy,
    extract_context_subset,
    find_paths,
    full_path_label,
    insert_child,
    iter_nodes,
    parse_path,
    replace_branch,
    resolve,
)
from .typing_engine import (
    BeamConfig,
    EntityMention,
    ScriptedScorer,
    TypePattern,
    TypingResult,
    closure_labels,
    load_patterns,
    match_pattern,
    type_entity_beamed,
)

__version__ = "0.1.0"

__all__ = [
    "Taxonomy",
    "TaxonomyStats",
    "TypeNode",
    "TypePath",
    "WorkbenchError",
    "ancestors",
    "apply_proposal",
    "backend_from_spec",
    "branch",
    "branch_from_obj",
    "branch_to_json",
    "branch_to_obj",
    "closure_labels",
    "compute_stats",
    "create_taxonomy",
    "default_seed",
    "define_rule",
    "detect_repetition",
    "diff_branches",
    "document_bytes",
    "expand_rule",
    "extract_context_subset",
    "find_paths",
    "full_path_label",
    "insert_child",
    "iter_nodes",
    "load_patterns",
    "load_rules",
    "load_taxonomy",
    "match_pattern",
    "materialize",
    "parse_path",
    "replace_branch",
    "resolve",
    "run_session",
    "save_taxonomy",
    "type_entity_beamed",
    "validate_proposal",
    "BeamConfig",
    "ChatRequest",
    "ChatResponse",
    "CombinationRule",
    "Diagnostic",
    "DuplicateGroup",
    "EngineConfig",
    "EntityMention",
    "ExpansionEngine",
    "ExpansionProposal",
    "ExpansionRequest",
    "FixtureStep",
    "HttpChatBackend",
    "MirroredPair",
    "RepetitionReport",
    "RuleSet",
    "ScriptedBackend",
    "ScriptedScorer",
    "SessionLog",
    "TypePattern",
    "TypingResult",
    "ValidationReport",
    "VirtualBranch",
    "VocabularyConstraint",
]
