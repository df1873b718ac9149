"""Bidirectional personalized PageRank estimation and PPR search."""
from .alias import AliasTable, build_alias
from .bidirectional import (
    EstimatorParams,
    PprEstimate,
    bidirectional_ppr,
    choose_c,
    default_r_max,
    estimate_from_vectors,
)
from .graph import (
    Graph,
    GraphFormatError,
    KeywordMap,
    SourceDistribution,
    generate_synthetic,
    load_edge_list,
    load_keywords,
)
from .grouped_index import GroupedIndex, build_grouped, rank_targets_grouped
from .oracle import ExactPpr, exact_ppr, exact_top_k, global_pagerank
from .reverse_push import (
    PushBudgetExceeded,
    ReverseVector,
    approx_contributions,
    approx_contributions_balanced,
)
from .sampler_search import (
    SamplerIndex,
    adaptive_r_max,
    build_sampler_index,
    power_law_delta,
    sample_and_rank,
)
from .walks import ForwardVector, SearchResult, forward_vector, monte_carlo_search, sample_walk

__version__ = "0.1.0"
