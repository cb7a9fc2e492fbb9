"""rstkit: symbolic and numeric toolkit for discourse-tree controlled text.

Positional binary discourse trees with validation and a text format,
deterministic tree encodings, count-based conditional tree sampling,
EDU segmentation heuristics, structure-aware attention masks, a verified
masked-attention kernel, a custom tree edit distance, TextRank keyphrase
extraction, and text evaluation metrics, all behind one ``rstkit`` CLI.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .tree import (
    MAX_DEPTH,
    MAX_POSITIONS,
    NUCLEARITIES,
    NUCLEARITY_INDEX,
    RELATIONS,
    RELATION_INDEX,
    InvalidTreeError,
    RstTree,
    TreeFormatError,
    ancestors_of,
    children_of,
    depth_of,
    ensure_valid,
    leaves_in_order,
    parent_of,
    parse_tree,
    serialize_tree,
    sibling_of,
    validate,
)
from .encoding import (
    EncodedTree,
    ProjectionWeights,
    encode_all_positions,
    encode_position,
    encode_tree,
    gelu,
    project_path,
)
from .sampler import (
    LEAF,
    OUTCOMES,
    ConditionalTable,
    EmptyCorpusError,
    SamplerConstraints,
    UnreachableTargetError,
    fit,
    load_table,
    sample_child,
    sample_tree,
    save_table,
)
from .segmentation import (
    EduCursor,
    TokenAssignment,
    assign_tokens,
    new_cursor,
)
from .masks import (
    AttentionMaskSet,
    ContextLayout,
    IncrementalMasker,
    context_mask,
    full_mask,
    text_mask,
)
from .attention import (
    AttentionInputs,
    attention_gradients,
    gradient_check,
    masked_attention,
)
from .tree_edit import EditOp, TedReport, apply_script, ted, ted_parent_maps
from .textrank import (
    KeyphraseCandidate,
    TaggedToken,
    WordGraph,
    build_graph,
    extract_keyphrases,
    pagerank,
)
from .metrics import (
    RecallTable,
    aggregate_recall,
    bleu_n,
    distinct_n,
    length_stats,
    ms_jaccard,
    relation_recall,
)
