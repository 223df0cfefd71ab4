"""Constant-Q and short-time Fourier front-ends."""
from .cqt import (
    CqtParams,
    FilterBank,
    design_filterbank,
    direct_cqt_reference,
    forward_cqt,
    frame_diagonal,
    inverse_cqt,
)
from .frontend import PRESETS, CqtFrontend, StftFrontend, as_frontend
from .stft import StftConfig, check_overlap_add, istft, stft
from .tfrep import TFRep, from_bytes, load_tfrep, magnitude_csv, save_tfrep, to_bytes
from .windows import WINDOW_KINDS, window_shape

__all__ = [
    "CqtParams", "FilterBank", "design_filterbank", "direct_cqt_reference", "forward_cqt",
    "frame_diagonal", "inverse_cqt", "PRESETS", "CqtFrontend", "StftFrontend", "as_frontend",
    "StftConfig", "check_overlap_add", "istft", "stft", "TFRep", "from_bytes", "load_tfrep",
    "magnitude_csv", "save_tfrep", "to_bytes", "WINDOW_KINDS", "window_shape",
]
