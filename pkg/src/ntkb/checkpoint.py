"""Binary model checkpoints and the threshold sidecar file.

Layout of a checkpoint, all integers little-endian:

    magic       4 bytes  `NTKB`
    version     uint32   currently 1; any other value is rejected
    kind        1 byte   0=ntn 1=bilinear 2=similarity 3=hadamard,
                         bit 0x10 set when U is shared across relations
    d, k        uint32   embedding dimension and slice count
    |E|, |R|    uint32   vocabulary sizes
    vocab       |E| then |R| names, each uint32 byte length + UTF-8 bytes
    payload     float64 x layout.size, the flat parameter vector in its
                canonical order (embeddings by id, per-relation records in
                declaration order, shared parameters)
    checksum    uint64   wrapping sum of the payload bytes

The threshold sidecar is a text file of `relation<TAB>threshold` lines,
one per relation, thresholds printed so they round-trip exactly
(infinities included).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CheckpointError
from .flatten import ParameterLayout, unpack
from .evaluation import ThresholdTable

MAGIC = b"NTKB"
VERSION = 1
_KIND_CODES = {"ntn": 0, "bilinear": 1, "similarity": 2, "hadamard": 3}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}
_SHARE_U_FLAG = 0x10
_HEADER = struct.Struct("<4sIBIIII")


@dataclass
class Checkpoint:
    layout: ParameterLayout
    x: np.ndarray
    entity_names: list
    relation_names: list

    @property
    def params(self):
        return unpack(self.layout, self.x)


def _payload_checksum(payload: bytes) -> int:
    return int(np.frombuffer(payload, dtype=np.uint8).sum(dtype=np.uint64))


def save_checkpoint(path, layout: ParameterLayout, x, entity_names, relation_names) -> None:
    x = np.ascontiguousarray(x, dtype="<f8")
    if x.shape != (layout.size,):
        raise CheckpointError(
            f"parameter vector has {x.size} components, layout requires {layout.size}"
        )
    if len(entity_names) != layout.n_entities or len(relation_names) != layout.n_relations:
        raise CheckpointError("vocabulary sizes do not match the layout")
    kind_byte = _KIND_CODES[layout.kind] | (_SHARE_U_FLAG if layout.share_u else 0)
    payload = x.tobytes()
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                MAGIC,
                VERSION,
                kind_byte,
                layout.dim,
                layout.slices,
                layout.n_entities,
                layout.n_relations,
            )
        )
        for name in list(entity_names) + list(relation_names):
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        fh.write(payload)
        fh.write(struct.pack("<Q", _payload_checksum(payload)))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data, path)
    magic, version, kind_byte, dim, slices, n_entities, n_relations = _HEADER.unpack(
        r.take(_HEADER.size)
    )
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a model checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    share_u = bool(kind_byte & _SHARE_U_FLAG)
    code = kind_byte & ~_SHARE_U_FLAG
    if code not in _CODE_KINDS:
        raise CheckpointError(f"{path}: unknown model kind code {code}")
    layout = ParameterLayout(
        kind=_CODE_KINDS[code],
        dim=dim,
        slices=slices,
        n_entities=n_entities,
        n_relations=n_relations,
        share_u=share_u,
    )
    names = []
    for _ in range(n_entities + n_relations):
        length = r.u32()
        names.append(r.take(length).decode("utf-8"))
    payload = r.take(layout.size * 8)
    stored = struct.unpack("<Q", r.take(8))[0]
    if r.pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - r.pos} trailing bytes")
    actual = _payload_checksum(payload)
    if stored != actual:
        raise CheckpointError(
            f"{path}: checksum mismatch (stored {stored}, computed {actual})"
        )
    x = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return Checkpoint(
        layout=layout,
        x=x,
        entity_names=names[:n_entities],
        relation_names=names[n_entities:],
    )


def save_thresholds(path, relation_names, table: ThresholdTable) -> None:
    if len(relation_names) != table.n_relations:
        raise CheckpointError("threshold table does not cover every relation")
    with open(path, "w", encoding="utf-8") as fh:
        for name, t in zip(relation_names, table.thresholds):
            fh.write(f"{name}\t{float(t)!r}\n")


def load_thresholds(path, relation_names) -> ThresholdTable:
    by_name = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CheckpointError(f"{path}:{lineno}: expected `relation<TAB>threshold`")
            try:
                by_name[parts[0]] = float(parts[1])
            except ValueError:
                raise CheckpointError(f"{path}:{lineno}: bad threshold {parts[1]!r}") from None
    thresholds = np.empty(len(relation_names), dtype=np.float64)
    for i, name in enumerate(relation_names):
        if name not in by_name:
            raise CheckpointError(f"{path}: no threshold for relation {name!r}")
        thresholds[i] = by_name[name]
    return ThresholdTable(
        thresholds=thresholds, dev_accuracy=np.full(len(relation_names), np.nan)
    )
