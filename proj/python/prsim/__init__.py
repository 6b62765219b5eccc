"""WiFi probe request trace simulator."""

from ._prsim import (
    ConfigError,
    IoError,
    ParseError,
    __version__,
    compute_mrca,
    evaluate,
    expand_config,
    generate,
    metrics,
    preset_json,
    presets,
    read_labels,
    read_pcap,
)

__all__ = [
    "ConfigError",
    "IoError",
    "ParseError",
    "__version__",
    "compute_mrca",
    "evaluate",
    "expand_config",
    "generate",
    "metrics",
    "preset_json",
    "presets",
    "read_labels",
    "read_pcap",
]
