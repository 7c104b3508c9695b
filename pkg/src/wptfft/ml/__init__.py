"""Random forest, evaluation metrics and Bayesian hyperparameter tuning."""

from .data import LabeledDataset, split_dataset, stratified_folds, substream
from .forest import ForestModel, ForestParams, MetadataMismatchError, predict, train_forest
from .metrics import EvaluationReport, binary_auc, evaluate, macro_ovr_auc
from .tuning import GaussianProcess, HyperparamSpace, Param, forest_space, tune_bayesian
