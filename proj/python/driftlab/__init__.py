"""Streaming drift detection: detectors, synthetic streams and the
retraining-strategy harness, backed by the C++ core."""

from ._core import (
    Adwin,
    Kswin,
    __version__,
    calibrate,
    entropy_bits,
    ks_p_value,
    ks_statistic,
    run_plan,
    synth_stream,
    write_synth,
)

__all__ = [
    "Adwin",
    "Kswin",
    "__version__",
    "calibrate",
    "entropy_bits",
    "ks_p_value",
    "ks_statistic",
    "run_plan",
    "synth_stream",
    "write_synth",
]
