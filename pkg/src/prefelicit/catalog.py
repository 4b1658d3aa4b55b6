"""The feasible item set: ingestion, synthesis and retrieval primitives.

Items live in an N x d float64 matrix kept row-major and contiguous; the
dot-product scan over it is the hot loop of everything downstream.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CatalogFormatError, InvalidArgumentError

_CACHE_MAGIC = b"PECATB1\n"

# Below this size top-k uses a full stable sort, which makes the
# smallest-index tie rule exact. Above it, argpartition is used; float ties
# at the cut boundary are vanishingly unlikely on real data.
_EXACT_SORT_LIMIT = 4096


@dataclass(frozen=True)
class Catalog:
    """Immutable feasible item set."""

    items: np.ndarray
    ids: tuple
    names: tuple | None = None
    attribute_names: tuple | None = None

    def __post_init__(self):
        items = np.ascontiguousarray(np.asarray(self.items, dtype=np.float64))
        object.__setattr__(self, "items", items)
        if items.ndim != 2 or items.shape[0] < 1 or items.shape[1] < 1:
            raise InvalidArgumentError("catalog requires an N x d matrix with N,d >= 1")
        if not np.all(np.isfinite(items)):
            raise InvalidArgumentError("catalog contains non-finite attribute values")
        if len(self.ids) != items.shape[0]:
            raise InvalidArgumentError("ids length must equal item count")
        if len(set(self.ids)) != len(self.ids):
            dupes = sorted({i for i in self.ids if list(self.ids).count(i) > 1})
            raise InvalidArgumentError(f"duplicate item ids: {dupes}")
        if self.names is not None and len(self.names) != items.shape[0]:
            raise InvalidArgumentError("names length must equal item count")
        if self.attribute_names is not None and len(self.attribute_names) != items.shape[1]:
            raise InvalidArgumentError("attribute_names length must equal dim")

    @property
    def n_items(self):
        return self.items.shape[0]

    @property
    def dim(self):
        return self.items.shape[1]

    @property
    def max_norm(self):
        """Largest item L2 norm; used as the default norm bound B."""
        return float(np.sqrt((self.items ** 2).sum(axis=1).max()))

    def is_partial_ready(self):
        """Partial-query mode needs named attributes with values in [0,1]."""
        return (
            self.attribute_names is not None
            and float(self.items.min()) >= 0.0
            and float(self.items.max()) <= 1.0
        )

    def validate_partial_mode(self):
        if self.attribute_names is None:
            raise InvalidArgumentError("partial-query mode requires attribute names")
        if float(self.items.min()) < 0.0 or float(self.items.max()) > 1.0:
            raise InvalidArgumentError("partial-query mode requires attribute values in [0,1]")


@dataclass(frozen=True)
class SynthSpec:
    """Standard-normal synthetic catalog specification."""

    n_items: int
    dim: int
    seed: int = 0

    def __post_init__(self):
        if self.n_items < 1 or self.dim < 1:
            raise InvalidArgumentError("n_items and dim must be >= 1")


def synth_catalog(spec: SynthSpec) -> Catalog:
    """Sample n_items i.i.d. N(0, I_dim) item vectors, deterministic in the seed."""
    rng = np.random.default_rng(spec.seed)
    items = rng.standard_normal((spec.n_items, spec.dim))
    ids = tuple(f"s{i}" for i in range(spec.n_items))
    return Catalog(items=items, ids=ids)


def load_catalog(path) -> Catalog:
    """Parse the canonical CSV format: header ``id,name,a0,...,a{d-1}``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CatalogFormatError("empty file") from None
        if len(header) < 3 or header[0] != "id" or header[1] != "name":
            raise CatalogFormatError(
                f"expected header starting with 'id,name,a0', got {header!r}", line=1
            )
        attr_names = tuple(header[2:])
        for j, a in enumerate(attr_names):
            if a != f"a{j}":
                raise CatalogFormatError(f"attribute column {j} must be named 'a{j}', got {a!r}", line=1)
        d = len(attr_names)
        ids, names, rows = [], [], []
        seen = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise CatalogFormatError(
                    f"expected {d + 2} fields, got {len(row)}", line=lineno
                )
            item_id = row[0]
            if item_id in seen:
                raise CatalogFormatError(f"duplicate id {item_id!r}", line=lineno)
            seen.add(item_id)
            try:
                vec = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise CatalogFormatError(f"non-numeric attribute: {exc}", line=lineno) from None
            if not all(np.isfinite(vec)):
                raise CatalogFormatError("non-finite attribute value", line=lineno)
            ids.append(item_id)
            names.append(row[1])
            rows.append(vec)
        if not rows:
            raise CatalogFormatError("catalog has no item rows")
    return Catalog(
        items=np.array(rows, dtype=np.float64),
        ids=tuple(ids),
        names=tuple(names),
        attribute_names=attr_names,
    )


def save_catalog(catalog: Catalog, path):
    """Write the canonical CSV; floats use 17 significant digits (round-trip exact)."""
    d = catalog.dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "name"] + [f"a{j}" for j in range(d)])
        names = catalog.names or ("",) * catalog.n_items
        for i in range(catalog.n_items):
            writer.writerow(
                [catalog.ids[i], names[i]] + [f"{v:.17g}" for v in catalog.items[i]]
            )


def save_cache(catalog: Catalog, path):
    """Binary cache: magic, N, d header, little-endian float64 items, JSON metadata."""
    meta = json.dumps(
        {
            "ids": list(catalog.ids),
            "names": list(catalog.names) if catalog.names is not None else None,
            "attribute_names": list(catalog.attribute_names)
            if catalog.attribute_names is not None
            else None,
        }
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<qq", catalog.n_items, catalog.dim))
        fh.write(catalog.items.astype("<f8").tobytes())
        fh.write(struct.pack("<q", len(meta)))
        fh.write(meta)


def load_cache(path) -> Catalog:
    with open(path, "rb") as fh:
        magic = fh.read(len(_CACHE_MAGIC))
        if magic != _CACHE_MAGIC:
            raise CatalogFormatError("not a catalog cache file (bad magic)")
        n, d = struct.unpack("<qq", fh.read(16))
        items = np.frombuffer(fh.read(n * d * 8), dtype="<f8").reshape(n, d)
        (meta_len,) = struct.unpack("<q", fh.read(8))
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
    return Catalog(
        items=items.copy(),
        ids=tuple(meta["ids"]),
        names=tuple(meta["names"]) if meta["names"] is not None else None,
        attribute_names=tuple(meta["attribute_names"])
        if meta["attribute_names"] is not None
        else None,
    )


def top_k_by_direction(catalog: Catalog, v, k: int):
    """Top-k items by dot product with ``v``, descending; ties -> smallest index.

    Returns a list of (item index, score) pairs.
    """
    if k > catalog.n_items:
        raise InvalidArgumentError(f"k={k} exceeds catalog size {catalog.n_items}")
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    scores = catalog.items @ np.asarray(v, dtype=np.float64)
    idx = top_k_indices(scores, k)
    return [(int(i), float(scores[i])) for i in idx]


def top_k_indices(scores, k: int):
    """Indices of the k largest scores, descending, smallest index on ties."""
    n = scores.shape[0]
    if n <= _EXACT_SORT_LIMIT:
        order = np.argsort(-scores, kind="stable")
        return order[:k]
    part = np.argpartition(-scores, k - 1)[:k]
    # stable sort within the partition preserves the smallest-index tie rule
    part.sort()
    order = part[np.argsort(-scores[part], kind="stable")]
    return order


def argmax_by_direction(items, v):
    """Index of the item maximizing the dot product (first max on ties)."""
    return int(np.argmax(items @ v))
