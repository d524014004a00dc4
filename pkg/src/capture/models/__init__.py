from .gateway import (  # noqa: F401
    ClassifierHandle,
    EnsembleSpec,
    ModelPool,
    Prediction,
    ensemble_confidence,
    holdout_splits,
)
