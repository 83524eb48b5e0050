"""The fitted scaler -> PCA -> SVM stack and its on-disk container."""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict, dataclass, field

import numpy as np

from .preprocessing import PCAModel, ScalerModel, apply_scaler, fit_pca, fit_scaler, pca_transform
from .selection import C_VALUES, GAMMA_FACTORS, CVReport, cross_validate, default_grid
from .svm import KKT_TOL, MAX_KERNEL_EVALS, BinaryMachine, SVMModel, train_svm

MODEL_FORMAT = "gaitablate-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class LearnerConfig:
    variance_fraction: float = 0.95
    C_values: tuple = C_VALUES
    gamma_factors: tuple = GAMMA_FACTORS
    folds: int = 10
    kkt_tol: float = KKT_TOL
    max_kernel_evals: int = MAX_KERNEL_EVALS

    def to_dict(self) -> dict:
        d = asdict(self)
        d["C_values"] = list(self.C_values)
        d["gamma_factors"] = list(self.gamma_factors)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LearnerConfig":
        d = dict(d)
        for key in ("C_values", "gamma_factors"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class TrainedPipeline:
    scaler: ScalerModel
    pca: PCAModel
    svm: SVMModel
    cv: CVReport | None = None
    encoding: str = ""

    def transform(self, X) -> np.ndarray:
        return pca_transform(self.pca, apply_scaler(self.scaler, X))

    def predict(self, X) -> np.ndarray:
        return self.svm.predict(self.transform(X))


def fit_recognizer(X, y, config: LearnerConfig = LearnerConfig(), seed: int = 0,
                   encoding: str = "") -> TrainedPipeline:
    """Standardize, reduce with PCA, pick (C, gamma) by CV, train the final SVM.

    Everything is fitted on ``X`` alone.
    """
    scaler = fit_scaler(X)
    Xs = apply_scaler(scaler, X)
    pca = fit_pca(Xs, config.variance_fraction)
    Z = pca_transform(pca, Xs)
    grid = default_grid(Z, config.C_values, config.gamma_factors)
    cv = cross_validate(Z, y, grid, config.folds, seed, config.kkt_tol, config.max_kernel_evals)
    C, gamma = cv.selected
    svm = train_svm(Z, y, C, gamma, config.kkt_tol, config.max_kernel_evals)
    return TrainedPipeline(scaler, pca, svm, cv, encoding)


# --------------------------------------------------------------------------
# container: a zip holding header.json plus one .npy per array

def save_model(path, model: TrainedPipeline) -> None:
    arrays = {
        "scaler_mean": model.scaler.mean, "scaler_std": model.scaler.std,
        "pca_mean": model.pca.mean, "pca_components": model.pca.components,
        "pca_explained_variance": model.pca.explained_variance,
        "svm_classes": model.svm.classes, "svm_X": model.svm.X,
    }
    machines = []
    for k, m in enumerate(model.svm.machines):
        arrays[f"m{k}_index"] = m.index
        arrays[f"m{k}_alpha"] = m.alpha
        arrays[f"m{k}_y"] = m.y
        machines.append({"pos": m.pos, "neg": m.neg, "rho": m.rho,
                         "iterations": m.iterations, "cap_reached": m.cap_reached})
    header = {
        "format": MODEL_FORMAT, "version": MODEL_VERSION, "encoding": model.encoding,
        "svm": {"gamma": model.svm.gamma, "C": model.svm.C, "machines": machines},
        "cv": None if model.cv is None else {
            "results": [list(r) for r in model.cv.results],
            "selected": list(model.cv.selected), "folds": model.cv.folds},
    }
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("header.json", json.dumps(header, indent=1))
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.save(buf, np.asarray(arr), allow_pickle=False)
            zf.writestr(f"{name}.npy", buf.getvalue())


def load_model(path) -> TrainedPipeline:
    with zipfile.ZipFile(path) as zf:
        header = json.loads(zf.read("header.json"))
        if header.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path} is not a {MODEL_FORMAT} container")
        if header.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {header.get('version')}")

        def arr(name):
            return np.load(io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)

        machines = [
            BinaryMachine(h["pos"], h["neg"], arr(f"m{k}_index"), arr(f"m{k}_alpha"),
                          arr(f"m{k}_y"), h["rho"], h["iterations"], h["cap_reached"])
            for k, h in enumerate(header["svm"]["machines"])
        ]
        svm = SVMModel(arr("svm_classes"), header["svm"]["gamma"], header["svm"]["C"],
                       arr("svm_X"), machines)
        scaler = ScalerModel(arr("scaler_mean"), arr("scaler_std"))
        pca = PCAModel(arr("pca_mean"), arr("pca_components"), arr("pca_explained_variance"))
    cv = header["cv"]
    if cv is not None:
        cv = CVReport(tuple(tuple(r) for r in cv["results"]), tuple(cv["selected"]), cv["folds"])
    return TrainedPipeline(scaler, pca, svm, cv, header["encoding"])
