"""Self-describing binary checkpoint: header, JSON metadata, raw arrays.

Layout, all integers little-endian:

    bytes 0..3    magic  b"TGFW"
    bytes 4..5    format version (uint16), currently 1
    bytes 6..13   metadata length in bytes (uint64)
    ...           UTF-8 JSON metadata
    ...           parameter buffers, float32 little-endian, packed in
                  metadata manifest order

The metadata carries the model config, vocabularies, optional class
weights, and an array manifest of (name, shape) pairs, so a file can be
inspected without loading it and validated before any array is read.
Arrays are stored as float32 regardless of the in-memory precision.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .corpus import Vocabulary, TagVocabulary
from .errors import DataError
from .layers import ClassWeights
from .model import ModelConfig, TagModel

MAGIC = b"TGFW"
VERSION = 1

_HEADER = struct.Struct("<4sHQ")


def save_checkpoint(model, path):
    """Write the model, its vocabularies, and any class weights to ``path``."""
    params = model.parameters()
    manifest = [{"name": name, "shape": list(t.data.shape)} for name, t in params.items()]
    meta = {
        "config": model.config.to_dict(),
        "vocab": model.vocab.words if model.vocab is not None else None,
        "tag_vocab": model.tag_vocab.tags if model.tag_vocab is not None else None,
        "class_weights": (
            {"n_examples": model.class_weights.n_examples,
             "tag_counts": list(model.class_weights.tag_counts)}
            if model.class_weights is not None else None
        ),
        "arrays": manifest,
    }
    meta_bytes = json.dumps(meta).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, len(meta_bytes)))
        f.write(meta_bytes)
        for name, tensor in params.items():
            f.write(np.ascontiguousarray(tensor.data, dtype="<f4").tobytes())


def load_checkpoint(path, dtype=np.float32):
    """Rebuild a model whose forward outputs match the saved one bit-for-bit.

    (Bit-identity holds at float32, the storage precision; pass
    ``dtype=np.float64`` to upcast the stored values.)
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise DataError(f"{path}: truncated checkpoint (no header)")
    magic, version, meta_len = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataError(f"{path}: not a checkpoint file (bad magic bytes)")
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")
    meta_end = _HEADER.size + meta_len
    if len(blob) < meta_end:
        raise DataError(f"{path}: truncated checkpoint (incomplete metadata)")
    try:
        meta = json.loads(blob[_HEADER.size:meta_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataError(f"{path}: corrupt checkpoint metadata: {e}") from None

    config = ModelConfig.from_dict(meta["config"])
    model = TagModel(config, dtype=dtype)
    params = model.parameters()
    manifest = meta["arrays"]
    names = [entry["name"] for entry in manifest]
    if set(names) != set(params):
        missing = sorted(set(params) - set(names))
        extra = sorted(set(names) - set(params))
        raise DataError(f"{path}: parameter mismatch (missing {missing}, unexpected {extra})")

    offset = meta_end
    for entry in manifest:
        shape = tuple(entry["shape"])
        tensor = params[entry["name"]]
        if shape != tensor.data.shape:
            raise DataError(
                f"{path}: array '{entry['name']}' has shape {shape}, expected {tensor.data.shape}"
            )
        nbytes = int(np.prod(shape, dtype=np.int64)) * 4
        if offset + nbytes > len(blob):
            raise DataError(f"{path}: truncated checkpoint (array '{entry['name']}' incomplete)")
        raw = np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape, dtype=np.int64)), offset=offset)
        tensor.data = raw.reshape(shape).astype(dtype)
        offset += nbytes
    if offset != len(blob):
        raise DataError(f"{path}: {len(blob) - offset} trailing bytes after the last array")

    if meta.get("vocab") is not None:
        model.vocab = Vocabulary(meta["vocab"])
    if meta.get("tag_vocab") is not None:
        model.tag_vocab = TagVocabulary(meta["tag_vocab"])
    cw = meta.get("class_weights")
    if cw is not None:
        model.class_weights = ClassWeights(n_examples=cw["n_examples"], tag_counts=tuple(cw["tag_counts"]))
    return model
