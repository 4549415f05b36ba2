"""Persistent embedding stores: unit-norm (image x region) vector matrices.

On-disk layout, all integers little-endian:

    bytes 0..4    magic b"GSEM"
    u32           format version (currently 1)
    u32           dim
    u64           n_rows
    u64           data_offset (absolute, 64-byte aligned)
    u32 + utf-8   region_set_id
    n_rows x (u32 + utf-8, u32 + utf-8)   per-row (image_id, cell_id)
    zero padding to data_offset
    n_rows * dim  float32, row-major

Stores are immutable once written; readers memory-map the matrix.
"""

from __future__ import annotations

import json
import mmap
import os
import struct
from dataclasses import dataclass

import numpy as np

from .geometry import GridKind, GridLayout, build_grid, enlarge_grid

MAGIC = b"GSEM"
VERSION = 1
_ALIGN = 64

WHOLE_REGION_SET = "whole"
WHOLE_CELL_ID = "whole"

NORM_TOLERANCE = 1e-4


class StoreError(ValueError):
    """Invalid store contents or on-disk data."""


def parse_region_set_id(region_set_id: str) -> tuple[str, float]:
    """Split "static9@e=0.1" into ("static9", 0.1); plain ids get e=0."""
    base, sep, suffix = region_set_id.partition("@")
    if base not in (WHOLE_REGION_SET, "static5", "static9"):
        raise StoreError(f"unknown region set '{region_set_id}'")
    if not sep:
        return base, 0.0
    if not suffix.startswith("e="):
        raise StoreError(f"malformed region set suffix in '{region_set_id}'")
    try:
        e = float(suffix[2:])
    except ValueError as exc:
        raise StoreError(f"malformed enlargement in '{region_set_id}'") from exc
    if base == WHOLE_REGION_SET and e != 0.0:
        raise StoreError("the whole-image region set takes no enlargement")
    return base, e


def format_region_set_id(base: str, enlargement: float = 0.0) -> str:
    if enlargement == 0.0:
        return base
    return f"{base}@e={enlargement:g}"


def grid_for_region_set(region_set_id: str) -> GridLayout | None:
    """The grid layout a region set refers to; None for the whole-image set."""
    base, e = parse_region_set_id(region_set_id)
    if base == WHOLE_REGION_SET:
        return None
    kind = GridKind.STATIC5 if base == "static5" else GridKind.STATIC9
    grid = build_grid(kind)
    return enlarge_grid(grid, e) if e else grid


def cell_ids_for_region_set(region_set_id: str) -> tuple[str, ...]:
    grid = grid_for_region_set(region_set_id)
    if grid is None:
        return (WHOLE_CELL_ID,)
    return grid.cell_ids


@dataclass
class EmbeddingStore:
    """An immutable matrix of unit-norm row vectors keyed by (image, cell)."""

    dim: int
    region_set_id: str
    keys: tuple[tuple[str, str], ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.matrix.shape != (len(self.keys), self.dim):
            raise StoreError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{len(self.keys)} keys x dim {self.dim}"
            )
        if self.matrix.dtype != np.float32:
            raise StoreError(f"matrix must be float32, got {self.matrix.dtype}")
        self._row_index = {key: i for i, key in enumerate(self.keys)}
        if len(self._row_index) != len(self.keys):
            raise StoreError("duplicate (image_id, cell_id) keys")

    @property
    def n_rows(self) -> int:
        return len(self.keys)

    @property
    def image_ids(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for image_id, _ in self.keys:
            seen.setdefault(image_id)
        return tuple(seen)

    def row_index(self, image_id: str, cell_id: str) -> int:
        try:
            return self._row_index[(image_id, cell_id)]
        except KeyError:
            raise KeyError(
                f"no row for ({image_id!r}, {cell_id!r}) in '{self.region_set_id}'"
            ) from None

    def row(self, image_id: str, cell_id: str) -> np.ndarray:
        return self.matrix[self.row_index(image_id, cell_id)]

    def rows_for(self, image_id: str, cell_ids: list[str]) -> np.ndarray:
        """The |cell_ids| x dim slice for one image, in cell_ids order."""
        indices = []
        for cell_id in cell_ids:
            key = (image_id, cell_id)
            if key not in self._row_index:
                raise KeyError(
                    f"no row for ({image_id!r}, {cell_id!r}) in '{self.region_set_id}'"
                )
            indices.append(self._row_index[key])
        if len(indices) > 1 and indices == list(range(indices[0], indices[-1] + 1)):
            return self.matrix[indices[0] : indices[-1] + 1]
        return self.matrix[indices]

    def check_norms(self, tolerance: float = NORM_TOLERANCE) -> None:
        norms = np.linalg.norm(np.asarray(self.matrix, dtype=np.float64), axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > tolerance)
        if bad.size:
            i = int(bad[0])
            raise StoreError(
                f"row {i} {self.keys[i]} has norm {norms[i]:.6f}, "
                f"outside 1 +/- {tolerance:g}"
            )

    def check_completeness(self) -> None:
        expected = cell_ids_for_region_set(self.region_set_id)
        per_image: dict[str, set[str]] = {}
        for image_id, cell_id in self.keys:
            per_image.setdefault(image_id, set()).add(cell_id)
        for image_id, cells in per_image.items():
            if cells != set(expected):
                raise StoreError(
                    f"image '{image_id}' has cells {sorted(cells)}, "
                    f"expected {sorted(expected)}"
                )

    def save(self, path: str) -> None:
        region_bytes = self.region_set_id.encode("utf-8")
        index_parts = []
        for image_id, cell_id in self.keys:
            for part in (image_id.encode("utf-8"), cell_id.encode("utf-8")):
                index_parts.append(struct.pack("<I", len(part)))
                index_parts.append(part)
        index_blob = b"".join(index_parts)
        head_len = 4 + 4 + 4 + 8 + 8 + 4 + len(region_bytes) + len(index_blob)
        data_offset = -(-head_len // _ALIGN) * _ALIGN
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IIQQ", VERSION, self.dim, self.n_rows, data_offset))
            fh.write(struct.pack("<I", len(region_bytes)))
            fh.write(region_bytes)
            fh.write(index_blob)
            fh.write(b"\x00" * (data_offset - head_len))
            matrix = np.ascontiguousarray(self.matrix, dtype=np.float32)
            if matrix.dtype.byteorder not in ("<", "="):
                matrix = matrix.astype("<f4")
            fh.write(matrix.tobytes())

    @classmethod
    def open(cls, path: str) -> "EmbeddingStore":
        """Reopen a saved store; the matrix is memory-mapped read-only."""
        with open(path, "rb") as fh:
            header = fh.read(28)
            if len(header) < 28 or header[:4] != MAGIC:
                raise StoreError(f"{path}: not an embedding store")
            version, dim, n_rows, data_offset = struct.unpack("<IIQQ", header[4:])
            if version != VERSION:
                raise StoreError(f"{path}: unsupported version {version}")

            def read_str() -> str:
                (length,) = struct.unpack("<I", fh.read(4))
                return fh.read(length).decode("utf-8")

            region_set_id = read_str()
            keys = tuple((read_str(), read_str()) for _ in range(n_rows))
            if fh.tell() > data_offset:
                raise StoreError(f"{path}: index overruns data offset")
            buf = mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ)
        matrix = np.frombuffer(
            buf, dtype="<f4", count=n_rows * dim, offset=data_offset
        ).reshape(n_rows, dim)
        store = cls(dim=dim, region_set_id=region_set_id, keys=keys, matrix=matrix)
        store.check_norms()
        return store


def _scan_keys(
    image_ids: list[str], region_set_id: str
) -> tuple[tuple[str, str], ...]:
    # Deterministic scan order: image_id sorted, then layout cell order.
    cells = cell_ids_for_region_set(region_set_id)
    return tuple(
        (image_id, cell_id) for image_id in sorted(image_ids) for cell_id in cells
    )


def build_store(
    vectors: np.ndarray,
    keys: list[tuple[str, str]],
    region_set_id: str,
) -> EmbeddingStore:
    """Assemble a store from raw vectors, normalizing each row to unit length."""
    parse_region_set_id(region_set_id)
    vectors = np.asarray(vectors)
    if vectors.ndim != 2:
        raise StoreError(f"vectors must be 2-D, got shape {vectors.shape}")
    if len(keys) != vectors.shape[0]:
        raise StoreError(
            f"{len(keys)} keys for {vectors.shape[0]} vector rows"
        )
    if not np.isfinite(vectors).all():
        raise StoreError("non-finite values in vectors")
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1, keepdims=True)
    zero = np.flatnonzero(norms[:, 0] == 0.0)
    if zero.size:
        raise StoreError(f"non-normalizable row {int(zero[0])} (zero vector)")
    matrix = (vectors.astype(np.float64) / norms).astype(np.float32)
    store = EmbeddingStore(
        dim=int(vectors.shape[1]),
        region_set_id=region_set_id,
        keys=tuple(keys),
        matrix=matrix,
    )
    store.check_completeness()
    return store


def read_raw_vectors(vectors_path: str) -> np.ndarray:
    """Load a raw row-major float32 vector file with a JSON sidecar.

    The sidecar at `<vectors_path>.json` declares {"rows": n, "dim": d}.
    """
    sidecar = vectors_path + ".json"
    try:
        with open(sidecar, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        rows, dim = int(meta["rows"]), int(meta["dim"])
    except (OSError, ValueError, KeyError) as exc:
        raise StoreError(f"cannot read vector sidecar {sidecar}: {exc}") from exc
    data = np.fromfile(vectors_path, dtype="<f4")
    if data.size != rows * dim:
        raise StoreError(
            f"{vectors_path}: {data.size} floats, sidecar declares {rows}x{dim}"
        )
    return data.reshape(rows, dim)


def write_raw_vectors(vectors_path: str, matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    matrix.tofile(vectors_path)
    with open(vectors_path + ".json", "w", encoding="utf-8") as fh:
        json.dump({"rows": int(matrix.shape[0]), "dim": int(matrix.shape[1])}, fh)


STORE_SUFFIX = ".gsem"


def store_path(directory: str, region_set_id: str) -> str:
    return os.path.join(directory, region_set_id + STORE_SUFFIX)


def load_store_dir(directory: str) -> dict[str, EmbeddingStore]:
    """Open every store file in a directory, keyed by region_set_id."""
    stores: dict[str, EmbeddingStore] = {}
    for name in sorted(os.listdir(directory)):
        if not name.endswith(STORE_SUFFIX):
            continue
        store = EmbeddingStore.open(os.path.join(directory, name))
        expected = name[: -len(STORE_SUFFIX)]
        if store.region_set_id != expected:
            raise StoreError(
                f"{name}: file name says '{expected}' but store says "
                f"'{store.region_set_id}'"
            )
        stores[store.region_set_id] = store
    return stores


def ingest(
    manifest: dict,
    vectors_path: str,
    region_set_id: str,
) -> EmbeddingStore:
    """Build a store from an image manifest and a raw vector file.

    Vector rows must follow the deterministic scan order: image ids sorted,
    cells in layout order within each image.
    """
    image_ids = sorted(manifest)
    keys = _scan_keys(image_ids, region_set_id)
    vectors = read_raw_vectors(vectors_path)
    if vectors.shape[0] != len(keys):
        raise StoreError(
            f"{vectors.shape[0]} vectors for {len(image_ids)} images x "
            f"{len(cell_ids_for_region_set(region_set_id))} cells "
            f"({len(keys)} expected)"
        )
    return build_store(vectors, list(keys), region_set_id)
