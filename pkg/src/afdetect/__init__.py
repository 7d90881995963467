"""AF detection from paired PPG/ECG segments.

Pipeline: ingest or synthesize 80-second segments, condition both channels
(wavelet denoising, baseline removal, min-max scaling), extract the fixed
22-entry feature vector, train three classical classifiers, and evaluate
with a stratified hold-out split plus 10-fold cross-validation.
"""

from . import classify, config, dataset, dsp, evaluate, features, kernels

__version__ = "0.1.0"

__all__ = [
    "classify",
    "config",
    "dataset",
    "dsp",
    "evaluate",
    "features",
    "kernels",
    "__version__",
]
