"""Composite-key joinable-table discovery.

Index a CSV corpus once (postings plus one super-key bit array per row),
then answer "which tables join with mine on these m columns" without
comparing cell values for most candidate rows.
"""

from .bits import BitArray
from .corpus import Catalog, CellLocation, CorpusStats, Table, TableHandle, normalize_value, read_csv_table
from .discovery import (
    DiscoveryRun,
    JoinEntry,
    JoinResult,
    QueryKey,
    brute_force_topk,
    count_filter_stats,
    discover_topk,
    joinability,
    mapping_count,
    mask_covers,
    select_initial_column,
)
from .errors import (
    BudgetError,
    CompatibilityError,
    ConsistencyError,
    FormatError,
    InputError,
    MultijoinError,
    NotFoundError,
)
from .hashers import (
    DEFAULT_SEED,
    HASHER_NAMES,
    BloomParams,
    HasherConfig,
    RowValueHasher,
    make_hasher,
    optimal_bf_hash_count,
)
from .index import Index, PostingList, build_index, load_index, save_index, super_key
from .xash import (
    ALPHABET,
    DEFAULT_FREQUENCY_ORDER,
    FeatureSet,
    XashParams,
    compute_params,
    position_bit,
    rotate_region,
    select_features,
    xash,
)

__version__ = "0.1.0"
