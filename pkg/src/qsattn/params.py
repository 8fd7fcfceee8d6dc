"""Named rotation-angle storage with sharing, plus lossless text persistence."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GROUP_U1 = "U1"
GROUP_U2 = "U2"
GROUP_U3 = "U3"
ANSATZ_GROUPS = (GROUP_U1, GROUP_U2, GROUP_U3)
EMB_PREFIX = "EMB."


@dataclass(frozen=True)
class ParamId:
    """Identifier of one rotation angle: ansatz group or per-token embedding."""

    group: str  # "U1" | "U2" | "U3" | "EMB.<token>"
    index: int

    @property
    def key(self) -> str:
        return f"{self.group}.{self.index}"

    @property
    def is_embedding(self) -> bool:
        return self.group.startswith(EMB_PREFIX)

    @property
    def token(self) -> str:
        if not self.is_embedding:
            raise ValueError(f"{self.key} is not an embedding parameter")
        return self.group[len(EMB_PREFIX):]

    @staticmethod
    def from_key(key: str) -> "ParamId":
        group, _, index = key.rpartition(".")
        if not group:
            raise ValueError(f"malformed parameter key {key!r}")
        return ParamId(group, int(index))


def embedding_id(token: str, index: int) -> ParamId:
    return ParamId(EMB_PREFIX + token, index)


@dataclass
class ParamStore:
    """Map from ParamId to angle in radians, with run metadata.

    Ansatz angles (U1/U2/U3) are shared across all block instances of their
    group; embedding angles are shared across all occurrences of their token.
    Embedding angles are trainable but excluded from the reported
    trainable-parameter count, which covers the ansatz groups only.
    """

    values: dict[ParamId, float] = field(default_factory=dict)
    dataset: str = ""
    variant: str = ""
    seed: int = 0

    def get(self, pid: ParamId) -> float:
        try:
            return self.values[pid]
        except KeyError:
            raise KeyError(f"unresolved parameter {pid.key}") from None

    def set(self, pid: ParamId, value: float) -> None:
        self.values[pid] = float(value)

    def __contains__(self, pid: ParamId) -> bool:
        return pid in self.values

    def group_size(self, group: str) -> int:
        return sum(1 for pid in self.values if pid.group == group)

    def ansatz_param_count(self) -> int:
        return sum(self.group_size(g) for g in ANSATZ_GROUPS)

    def embedding_param_count(self) -> int:
        return sum(1 for pid in self.values if pid.is_embedding)

    def sorted_ids(self) -> list[ParamId]:
        """Deterministic ordering: ansatz groups first, then embeddings."""

        def rank(pid: ParamId):
            if pid.group in ANSATZ_GROUPS:
                return (0, ANSATZ_GROUPS.index(pid.group), "", pid.index)
            return (1, 0, pid.group, pid.index)

        return sorted(self.values, key=rank)

    # -- persistence -------------------------------------------------------

    def save(self, path: str | Path) -> None:
        lines = ["# qsattn parameters v1"]
        lines.append(f"meta dataset {self.dataset}")
        lines.append(f"meta variant {self.variant}")
        lines.append(f"meta seed {self.seed}")
        for pid in self.sorted_ids():
            lines.append(f"param {pid.key} {self.values[pid].hex()}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @staticmethod
    def load(path: str | Path) -> "ParamStore":
        store = ParamStore()
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "meta" and len(parts) >= 2:
                key = parts[1]
                val = parts[2] if len(parts) > 2 else ""
                if key == "dataset":
                    store.dataset = val
                elif key == "variant":
                    store.variant = val
                elif key == "seed":
                    store.seed = int(val)
            elif parts[0] == "param" and len(parts) == 3:
                store.values[ParamId.from_key(parts[1])] = float.fromhex(parts[2])
            else:
                raise ValueError(f"malformed parameter file line {lineno}: {line!r}")
        return store


def init_ansatz_params(store: ParamStore, group: str, count: int,
                       rng: np.random.Generator) -> None:
    """Register `count` angles for an ansatz group, uniform in [0, 2*pi)."""
    for k in range(count):
        store.set(ParamId(group, k), rng.uniform(0.0, 2 * np.pi))


def init_embedding_params(store: ParamStore, token: str, count: int,
                          rng: np.random.Generator) -> None:
    """Register per-token embedding angles, uniform in [-0.1, 0.1]."""
    for k in range(count):
        store.set(embedding_id(token, k), rng.uniform(-0.1, 0.1))
