"""WPMixer: multi-resolution wavelet patch-mixer forecasting in float64."""

__version__ = "0.1.0"
