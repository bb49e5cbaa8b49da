"""Max-margin supervised topic models trained by collapsed Gibbs sampling.

Training augments the margin loss with per-document scale-mixture
variables so that every conditional is standard (Gaussian, multinomial,
inverse Gaussian), then collapses the Dirichlet variables and samples.
Binary classification, epsilon-insensitive regression, and multi-task
(multi-class / multi-label) variants share one set of kernels; an
unsupervised collapsed-Gibbs baseline, a prediction pipeline, metrics,
and a CLI round out the toolkit.
"""

from .corpus import LabeledCorpus, load_bow, save_svmlight, train_test_split, validate
from .predict import ModelSnapshot, TestInferenceConfig, predict_corpus
from .randkit import RngState
from .topic_state import CountState, Hyperparams, run_lda_baseline

__all__ = [
    "LabeledCorpus",
    "load_bow",
    "save_svmlight",
    "train_test_split",
    "validate",
    "ModelSnapshot",
    "TestInferenceConfig",
    "predict_corpus",
    "RngState",
    "CountState",
    "Hyperparams",
    "run_lda_baseline",
]

__version__ = "0.1.0"
