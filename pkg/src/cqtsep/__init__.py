"""Invertible CQT/STFT front-ends with oracle-mask separation and SDR evaluation."""
from .signal import Signal

__version__ = "0.1.0"
__all__ = ["Signal"]
