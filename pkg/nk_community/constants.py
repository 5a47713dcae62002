import os

NO_COLOR = "NO_COLOR" in os.environ
"support NO_COLOR standard https://no-color.org"

DEFAULT_ENUMERATION_CAP = 28
"largest N enumerated exhaustively unless NKCOMM_ENUMERATION_CAP says otherwise"

DEFAULT_CHUNK_BITS = 12
"genotypes per enumeration chunk, as a power of two"

ENUMERATION_HARD_CAP = 32
"int64 limb accumulators stay exact for up to 2**32 genotypes"

SAMPLING_MAX_BITS = 62
"genotype indices must fit a signed 64-bit integer when sampling"

BRUTE_FORCE_MAX_NODES = 10
"Bell(10) = 115975 partitions"

DEFAULT_EDGE_THRESHOLD = 1e-12
"drops numerically-zero correlations when building the graph"

DEFAULT_REPLICATES = 20

DEFAULT_BASE_SEED = 0
