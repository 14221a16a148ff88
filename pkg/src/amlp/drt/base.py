"""One entry point for all reducers plus embedding/model export."""

import csv
from dataclasses import dataclass, fields, replace

import numpy as np

from .._validation import check_matrix
from ..config import parse_key_values
from ..exceptions import ReducerError
from .ica import CONTRASTS, FastICAReducer
from .kpca import KernelPCAReducer
from .lpp import LPPReducer
from .svd import SVDReducer

METHODS = ("ica", "kpca", "svd", "lpp", "none")
DISPLAY_NAMES = {"ica": "ICA", "kpca": "KPCA", "svd": "SVD", "lpp": "LPP", "none": "Without DRT"}


@dataclass(frozen=True)
class ReducerConfig:
    method: str = "svd"
    k: int = 2
    seed: int = 0
    kpca_sigma: object = "auto"
    lpp_neighbors: int = 10
    lpp_heat: object = "auto"
    ica_contrast: str = "logcosh"
    ica_tol: float = 1e-6
    ica_max_iter: int = 500

    def __post_init__(self):
        if self.method not in METHODS:
            raise ReducerError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.ica_contrast not in CONTRASTS:
            raise ReducerError(f"ica_contrast must be one of {CONTRASTS}")
        if self.lpp_neighbors < 1 or self.ica_max_iter < 1 or not self.ica_tol > 0:
            raise ReducerError("lpp_neighbors, ica_max_iter and ica_tol must be positive")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class ReducedEmbedding:
    values: np.ndarray
    method: str
    model: object = None

    @property
    def k(self):
        return self.values.shape[1]


class IdentityReducer:
    """The no-reduction baseline; returns its input unchanged."""

    def fit_transform(self, X, y=None):
        return X

    model_ = None


def make_reducer(cfg):
    """The sklearn-style estimator configured by ``cfg``."""
    if cfg.method == "svd":
        return SVDReducer(n_components=cfg.k)
    if cfg.method == "kpca":
        return KernelPCAReducer(n_components=cfg.k, sigma=cfg.kpca_sigma, random_state=cfg.seed)
    if cfg.method == "ica":
        return FastICAReducer(n_components=cfg.k, contrast=cfg.ica_contrast, tol=cfg.ica_tol,
                              max_iter=cfg.ica_max_iter, random_state=cfg.seed)
    if cfg.method == "lpp":
        return LPPReducer(n_components=cfg.k, n_neighbors=cfg.lpp_neighbors, heat=cfg.lpp_heat)
    return IdentityReducer()


def reduce(x, cfg):
    """Fit the configured reducer on a standardized matrix and embed it."""
    if cfg.method == "none":
        x = np.asarray(x)
        return ReducedEmbedding(np.array(x, dtype=np.float64, copy=True), "none", None)
    x = check_matrix(x, name="x", error=ReducerError)
    est = make_reducer(cfg)
    values = est.fit_transform(x)
    if not np.all(np.isfinite(values)):
        raise ReducerError(f"{cfg.method} produced non-finite values")
    return ReducedEmbedding(values, cfg.method, est.model_)


def reduce_svd(x, k):
    return reduce(x, ReducerConfig(method="svd", k=k))


def reduce_kpca(x, k, sigma="auto", seed=0):
    return reduce(x, ReducerConfig(method="kpca", k=k, kpca_sigma=sigma, seed=seed))


def reduce_ica(x, k, cfg=None):
    return reduce(x, (cfg or ReducerConfig()).with_(method="ica", k=k))


def reduce_lpp(x, k, cfg=None):
    return reduce(x, (cfg or ReducerConfig()).with_(method="lpp", k=k))


def config_from_mapping(mapping):
    """Build a :class:`ReducerConfig` from string key/values (config files, CLI)."""
    kinds = {f.name: f.type for f in fields(ReducerConfig)}
    kwargs = {}
    for key, raw in mapping.items():
        if key not in kinds:
            continue
        if key in ("kpca_sigma", "lpp_heat"):
            kwargs[key] = "auto" if str(raw) == "auto" else float(raw)
        elif kinds[key] in (int, "int"):
            kwargs[key] = int(raw)
        elif kinds[key] in (float, "float"):
            kwargs[key] = float(raw)
        else:
            kwargs[key] = str(raw)
    return ReducerConfig(**kwargs)


def write_embedding(path, customer_ids, values):
    values = np.asarray(values)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["customer_id", *(f"c{i}" for i in range(1, values.shape[1] + 1))])
        for cid, row in zip(customer_ids, values):
            writer.writerow([cid, *(repr(float(v)) for v in row)])


def export_model(model, path):
    """Dump fitted parameters as ``key = value`` lines and ``[name] rows cols`` matrix blocks."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"model = {type(model).__name__ if model is not None else 'identity'}\n")
        if model is None:
            return
        for f in fields(model):
            value = getattr(model, f.name)
            if isinstance(value, np.ndarray):
                arr = value.reshape(1, -1) if value.ndim < 2 else value
                fh.write(f"[{f.name}] {arr.shape[0]} {arr.shape[1]}\n")
                for row in arr:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
            else:
                fh.write(f"{f.name} = {value!r}\n")


def load_model_dump(path):
    """Read back :func:`export_model` output as a dict of scalars (str) and arrays."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("["):
            name, rows, cols = line[1:].replace("]", "").split()
            rows, cols = int(rows), int(cols)
            data = [[float(v) for v in lines[i + 1 + r].split(",")] for r in range(rows)]
            out[name] = np.array(data).reshape(rows, cols)
            i += rows + 1
        else:
            out.update(parse_key_values(line))
            i += 1
    return out
