"""Recognition stack: standardization, PCA, SMO-trained RBF SVM, grid search."""

from .preprocessing import (
    PCAModel,
    ScalerModel,
    apply_scaler,
    fit_pca,
    fit_scaler,
    pca_inverse_transform,
    pca_transform,
)
from .recognizer import LearnerConfig, TrainedPipeline, fit_recognizer, load_model, save_model
from .selection import CVReport, accuracy, cross_validate, default_grid, stratified_folds
from .svm import SVMModel, rbf_kernel, train_svm

__all__ = [
    "CVReport", "LearnerConfig", "PCAModel", "SVMModel", "ScalerModel", "TrainedPipeline",
    "accuracy", "apply_scaler", "cross_validate", "default_grid", "fit_pca", "fit_recognizer",
    "fit_scaler", "load_model", "pca_inverse_transform", "pca_transform", "rbf_kernel",
    "save_model", "stratified_folds", "train_svm",
]
