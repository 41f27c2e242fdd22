"""Generative Top-K sequential recommendation toolkit.

Train a small decoder-only sequence model on item-ID histories, produce
Top-K recommendations with single-sequence decoding (greedy, beam search,
temperature sampling with top-k filtering) or multi-sequence aggregation
(reciprocal-rank and relevance aggregation), and evaluate offline with
NDCG / Recall / MAP and per-position hit-rate curves.
"""

from .aggregate import AggregationConfig, aggregate_recommend, ra_single, rra_single
from .data import (
    Catalog,
    DatasetStats,
    FileFormat,
    InteractionLog,
    RawEvent,
    SplitDataset,
    compute_stats,
    ingest,
    load_bundle,
    preprocess,
    save_bundle,
    split,
)
from .decode import (
    GeneratedSequence,
    GenerationConstraints,
    RecommendationList,
    apply_temperature,
    beam_search,
    greedy_decode,
    positional_list,
    temperature_sample,
    topk_filter,
    topk_prediction,
)
from .evaluate import EvalReport, StrategyDescriptor, evaluate_split, recommend
from .metrics import (
    hitrate_by_position,
    map_at_k,
    ndcg_at_k,
    paired_ttest,
    recall_at_k,
)
from .model import (
    MarkovModel,
    ModelConfig,
    NextItemModel,
    PopularityModel,
    TrainConfig,
    TransformerModel,
    TransitionTableModel,
    load_checkpoint,
    save_checkpoint,
    train_model,
)
from .scores import ScoreVector
from .seeds import derive_seed

__version__ = "0.1.0"
