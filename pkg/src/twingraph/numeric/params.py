"""Named parameter storage with frozen entries and npz checkpoints."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

import numpy as np

from .tensor import Tensor

_META_KEY = "__meta__"
_ADAM_M = "__adam_m__"
_ADAM_V = "__adam_v__"


class ParameterStore:
    """A flat registry of named tensors plus optimizer state and metadata.

    Frozen entries (context embeddings, for instance) never require grad
    and are skipped by the optimizers, but they round-trip through
    checkpoints like everything else.  ``meta`` holds whatever JSON-
    serializable run configuration should travel with the weights.
    """

    def __init__(self):
        self._tensors: dict[str, Tensor] = {}
        self._frozen: set[str] = set()
        self.meta: dict = {}
        self.adam_m: dict[str, np.ndarray] = {}
        self.adam_v: dict[str, np.ndarray] = {}
        self.adam_t: int = 0

    def add(self, name: str, value: np.ndarray, frozen: bool = False) -> Tensor:
        if name in self._tensors:
            raise KeyError(f"parameter {name!r} already registered")
        if name.startswith("__"):
            raise KeyError(f"parameter name {name!r} uses a reserved prefix")
        t = Tensor(np.array(value, dtype=np.float64, order="C"), requires_grad=not frozen)
        self._tensors[name] = t
        if frozen:
            self._frozen.add(name)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def is_frozen(self, name: str) -> bool:
        return name in self._frozen

    def trainable(self) -> Iterator[tuple[str, Tensor]]:
        for name, t in self._tensors.items():
            if name not in self._frozen:
                yield name, t

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.grad = None

    def parameter_count(self) -> int:
        return sum(t.data.size for name, t in self.trainable())

    def save(self, path: str | Path, include_optimizer: bool = True) -> None:
        """Write all parameters (and Adam state) to one ``.npz`` file."""
        arrays: dict[str, np.ndarray] = {name: t.data for name, t in self._tensors.items()}
        if include_optimizer:
            for name, m in self.adam_m.items():
                arrays[_ADAM_M + name] = m
            for name, v in self.adam_v.items():
                arrays[_ADAM_V + name] = v
        meta = {
            "meta": self.meta,
            "frozen": sorted(self._frozen),
            "adam_t": self.adam_t if include_optimizer else 0,
        }
        arrays[_META_KEY] = np.frombuffer(
            json.dumps(meta, ensure_ascii=False).encode("utf-8"), dtype=np.uint8
        )
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "ParameterStore":
        store = cls()
        with np.load(Path(path)) as bundle:
            meta = json.loads(bytes(bundle[_META_KEY]).decode("utf-8"))
            store.meta = meta["meta"]
            frozen = set(meta["frozen"])
            store.adam_t = int(meta.get("adam_t", 0))
            for key in bundle.files:
                if key == _META_KEY:
                    continue
                if key.startswith(_ADAM_M):
                    store.adam_m[key[len(_ADAM_M) :]] = np.ascontiguousarray(bundle[key])
                elif key.startswith(_ADAM_V):
                    store.adam_v[key[len(_ADAM_V) :]] = np.ascontiguousarray(bundle[key])
                else:
                    store.add(key, bundle[key], frozen=key in frozen)
        return store


def load_embedding_tsv(path: str | Path, dim: int | None = None) -> dict[str, np.ndarray]:
    """Read pretrained vectors from a tab-separated ``name\\tv1\\tv2...`` file.

    Blank lines and ``#`` comments are skipped; every vector must share one
    dimensionality (checked against ``dim`` when given).
    """
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.rstrip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise ValueError(f"{path}:{lineno}: expected name and at least one value")
        name = fields[0]
        try:
            vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad float: {exc}") from exc
        if dim is None:
            dim = vec.size
        if vec.size != dim:
            raise ValueError(f"{path}:{lineno}: got {vec.size} values, expected {dim}")
        vectors[name] = vec
    return vectors
