"""Channel model: spectral-efficiency traces and PRB capacity."""

from hybrid_slicing.channel.model import (
    CQI_EFFICIENCY,
    DEFAULT_ETA_MAX,
    N_SYM,
    PROFILES,
    MobilityProfile,
    PrbCapacity,
    ProfileParams,
    SeTrace,
    bits_per_prb,
    load_se_traces,
    quantize_cqi,
    resolve_profiles,
    synthesize_se,
    write_se_csv,
)

__all__ = [
    "CQI_EFFICIENCY",
    "DEFAULT_ETA_MAX",
    "N_SYM",
    "PROFILES",
    "MobilityProfile",
    "PrbCapacity",
    "ProfileParams",
    "SeTrace",
    "bits_per_prb",
    "load_se_traces",
    "quantize_cqi",
    "resolve_profiles",
    "synthesize_se",
    "write_se_csv",
]
