"""VOCM model container: a trained classifier plus its whole feature chain.

Layout (little-endian throughout)::

    4 bytes  magic b"VOCM"
    u16      format version (1)
    u8       model kind tag (0 tree, 1 logistic, 2 forest, 3 svm, 4 plsda)
    u32      metadata length M, then M bytes of UTF-8 JSON (spec, seed,
             preprocessing steps, input axes, run configuration)
    u32      number of array blocks, then per block:
               u16 name length, name (UTF-8)
               u8  dtype (0 = float64, 1 = int64)
               u8  ndim, then ndim x u64 dimensions
               raw values, row-major
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .core import Axis
from .errors import BadMagic, MalformedHeader, TruncatedPayload, UnsupportedVersion
from .features import PcaModel, SelectionMask, Standardizer
from .models import (DecisionTree, LogisticModel, PLSDAModel, RandomForest, SVMModel,
                     model_kind, spec_from_dict)
from .models.specs import KIND_TAGS, KINDS
from .pipeline import FeaturePipeline, TrainedModel
from .preprocess import PreprocessConfig

MAGIC = b"VOCM"
VERSION = 1
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i8")}
_CODES = {"f": 0, "i": 1}

_TREE_FIELDS = ("feature", "threshold", "left", "right", "counts", "impurity_decrease")


# --- encoding ---------------------------------------------------------------------

def _block(name: str, array) -> bytes:
    array = np.asarray(array)
    code = _CODES["i"] if array.dtype.kind in "iub" else _CODES["f"]
    data = np.ascontiguousarray(array, dtype=_DTYPES[code])
    raw_name = name.encode("utf-8")
    head = struct.pack("<H", len(raw_name)) + raw_name + struct.pack("<BB", code, data.ndim)
    head += struct.pack(f"<{data.ndim}Q", *data.shape)
    return head + data.tobytes()


def _tree_arrays(prefix: str, tree: DecisionTree) -> dict:
    return {f"{prefix}.{f}": getattr(tree, f) for f in _TREE_FIELDS}


def _classifier_arrays(model) -> dict:
    kind = model_kind(model)
    if kind == "decision_tree":
        return _tree_arrays("tree", model)
    if kind == "random_forest":
        arrays = {"forest.importances": model.importances}
        offsets = np.cumsum([0] + [t.n_nodes for t in model.trees])
        arrays["forest.offsets"] = offsets
        for f in _TREE_FIELDS:
            arrays[f"forest.{f}"] = np.concatenate([getattr(t, f) for t in model.trees]) \
                if f != "impurity_decrease" else np.vstack([t.impurity_decrease for t in model.trees])
        return arrays
    if kind == "logistic_regression":
        return {"logit.weights": model.weights, "logit.intercept": [model.intercept]}
    if kind == "svm":
        arrays = {"svm.intercept": [model.intercept]}
        if model.spec.kernel == "linear":
            arrays["svm.weights"] = model.weights
        else:
            arrays["svm.support_vectors"] = model.support_vectors
            arrays["svm.dual_coef"] = model.dual_coef
        return arrays
    return {"pls.weights": model.weights, "pls.loadings": model.loadings,
            "pls.y_loadings": model.y_loadings, "pls.x_mean": model.x_mean,
            "pls.y_mean": [model.y_mean]}


def to_bytes(trained: TrainedModel) -> bytes:
    fp = trained.features
    kind = model_kind(trained.classifier)
    meta = {
        "kind": kind,
        "spec": trained.spec.to_dict(),
        "seed": int(trained.seed),
        "n_features": int(trained.classifier.n_features),
        "preprocess": fp.preprocess.to_text(),
        "drift_axis": fp.drift_axis.to_dict(),
        "retention_axis": fp.retention_axis.to_dict(),
        "pca_requested": fp.pca.requested_components,
        "selection": None if fp.selection is None else {
            "method": fp.selection.method, "clamped": fp.selection.clamped,
            "n_source_features": fp.selection.n_source_features},
        "run_config": trained.run_config,
    }
    if kind == "svm":
        meta["svm_n_iter"] = trained.classifier.n_iter
    arrays = {
        "std.means": fp.standardizer.means,
        "std.stds": fp.standardizer.stds,
        "pca.mean": fp.pca.mean,
        "pca.components": fp.pca.components,
        "pca.explained_variance": fp.pca.explained_variance,
        "pca.explained_variance_ratio": fp.pca.explained_variance_ratio,
        "scale": [fp.score_scale],
    }
    if fp.selection is not None:
        arrays["sel.kept"] = fp.selection.kept_indices
        arrays["sel.scores"] = fp.selection.scores
    arrays.update(_classifier_arrays(trained.classifier))
    raw_meta = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out = [MAGIC, struct.pack("<HB", VERSION, KIND_TAGS[kind]),
           struct.pack("<I", len(raw_meta)), raw_meta, struct.pack("<I", len(arrays))]
    out.extend(_block(name, arr) for name, arr in arrays.items())
    return b"".join(out)


def save_model(trained: TrainedModel, path) -> int:
    data = to_bytes(trained)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=".vocm-", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(data)


# --- decoding ---------------------------------------------------------------------

class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedPayload(f"model file ends at byte {len(self.data)} while reading "
                                   f"{what} at byte {self.pos} ({n} bytes needed)")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size, what))


def _read_blocks(r: _Reader) -> dict:
    (count,) = r.unpack("<I", "block count")
    arrays = {}
    for _ in range(count):
        start = r.pos
        (name_len,) = r.unpack("<H", "block name length")
        try:
            name = r.take(name_len, "block name").decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedHeader(f"block name at byte {start + 2} is not UTF-8") from None
        code, ndim = r.unpack("<BB", f"block {name!r} header")
        if code not in _DTYPES:
            raise MalformedHeader(f"block {name!r} at byte {start}: unknown dtype code {code}")
        shape = r.unpack(f"<{ndim}Q", f"block {name!r} shape")
        dtype = _DTYPES[code]
        n_bytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64))
        raw = r.take(n_bytes, f"block {name!r} payload")
        arrays[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
    if r.pos != len(r.data):
        raise MalformedHeader(f"{len(r.data) - r.pos} trailing bytes after the last block at byte {r.pos}")
    return arrays


def _tree_from(arrays, prefix, lo, hi, n_features, spec, imp) -> DecisionTree:
    return DecisionTree(
        feature=arrays[f"{prefix}.feature"][lo:hi],
        threshold=arrays[f"{prefix}.threshold"][lo:hi],
        left=arrays[f"{prefix}.left"][lo:hi],
        right=arrays[f"{prefix}.right"][lo:hi],
        counts=arrays[f"{prefix}.counts"][lo:hi],
        n_features=n_features,
        impurity_decrease=imp,
        spec=spec,
    )


def _classifier_from(kind: str, spec, arrays: dict, meta: dict):
    d = meta["n_features"]
    if kind == "decision_tree":
        n = len(arrays["tree.feature"])
        return _tree_from(arrays, "tree", 0, n, d, spec, arrays["tree.impurity_decrease"])
    if kind == "random_forest":
        offsets = arrays["forest.offsets"]
        imps = arrays["forest.impurity_decrease"]
        trees = [_tree_from(arrays, "forest", offsets[i], offsets[i + 1], d, spec, imps[i])
                 for i in range(len(offsets) - 1)]
        return RandomForest(trees, arrays["forest.importances"], d, spec, meta["seed"])
    if kind == "logistic_regression":
        return LogisticModel(arrays["logit.weights"], float(arrays["logit.intercept"][0]), spec)
    if kind == "svm":
        b = float(arrays["svm.intercept"][0])
        if spec.kernel == "linear":
            return SVMModel(spec, b, d, weights=arrays["svm.weights"], n_iter=meta.get("svm_n_iter", 0))
        return SVMModel(spec, b, d, support_vectors=arrays["svm.support_vectors"],
                        dual_coef=arrays["svm.dual_coef"], n_iter=meta.get("svm_n_iter", 0))
    return PLSDAModel(arrays["pls.weights"], arrays["pls.loadings"], arrays["pls.y_loadings"],
                      arrays["pls.x_mean"], float(arrays["pls.y_mean"][0]), spec)


def from_bytes(data: bytes) -> TrainedModel:
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic at byte 0: {data[:4]!r} (expected {MAGIC!r})")
    r = _Reader(data)
    r.take(4, "magic")
    version, tag = r.unpack("<HB", "version and kind tag")
    if version != VERSION:
        raise UnsupportedVersion(f"model format version {version} at byte 4 (supported: {VERSION})")
    if tag >= len(KINDS):
        raise MalformedHeader(f"unknown model kind tag {tag} at byte 6")
    kind = KINDS[tag]
    (meta_len,) = r.unpack("<I", "metadata length")
    meta_start = r.pos
    try:
        meta = json.loads(r.take(meta_len, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeader(f"metadata at byte {meta_start} is not UTF-8 JSON: {exc}") from None
    arrays = _read_blocks(r)
    try:
        spec = spec_from_dict(meta["spec"])
        if spec.kind != kind:
            raise MalformedHeader(f"kind tag {kind!r} disagrees with metadata spec {spec.kind!r}")
        selection = None
        if meta["selection"] is not None:
            selection = SelectionMask(arrays["sel.kept"], arrays["sel.scores"],
                                      meta["selection"]["n_source_features"],
                                      meta["selection"]["method"], meta["selection"]["clamped"])
        pca = PcaModel(arrays["pca.mean"], arrays["pca.components"], arrays["pca.explained_variance"],
                       arrays["pca.explained_variance_ratio"], meta["pca_requested"])
        features = FeaturePipeline(
            preprocess=PreprocessConfig.from_text(meta["preprocess"]),
            drift_axis=Axis.from_dict(meta["drift_axis"]),
            retention_axis=Axis.from_dict(meta["retention_axis"]),
            standardizer=Standardizer(arrays["std.means"], arrays["std.stds"]),
            pca=pca,
            score_scale=float(arrays["scale"][0]),
            selection=selection,
        )
        classifier = _classifier_from(kind, spec, arrays, meta)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, MalformedHeader):
            raise
        raise MalformedHeader(f"incomplete or inconsistent model container: {exc!r}") from None
    return TrainedModel(features, classifier, spec, meta["seed"], meta.get("run_config", {}))


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
