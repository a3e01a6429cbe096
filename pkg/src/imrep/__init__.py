"""Image representation pipelines: Fisher-vector encodings, small-scale CNNs,
and a linear-SVM classification and evaluation harness.

Subpackages follow the processing stages: ``descriptors`` (dense SIFT and
local colour statistics), ``reduce`` (PCA and spatial extension), ``gmm``,
``fisher`` (FV encoding), ``augment`` (crop/flip sampling and fusion),
``cnn`` (architectures, training, feature extraction), ``svm``,
``evaluation`` (AP / top-k / class accuracy), and ``harness`` (CLI,
persistence, experiment runner).
"""

from imrep.errors import DataError, ImrepError, NumericalError

__all__ = ["DataError", "ImrepError", "NumericalError"]

__version__ = "0.1.0"
