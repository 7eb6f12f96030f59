"""Reading and writing ``.bwvnet`` model files.

Layout::

    8 bytes   magic  b"BWVNET\\0\\0"
    8 bytes   header length, little-endian uint64
    header    UTF-8 JSON, space-padded to a multiple of 8 bytes
    blob      little-endian float32 tensors, each starting on an 8-byte offset

Tensor offsets in the header are relative to the start of the blob.
"""

import json
import os
import struct

import numpy as np

from .errors import FormatError
from .network import Network, NetworkSpec

MAGIC = b"BWVNET\x00\x00"
VERSION = 1
_ALIGN = 8


def _pad(n):
    return (-n) % _ALIGN


def to_bytes(net):
    directory = []
    chunks = []
    offset = 0
    for name in sorted(net.params):
        arr = np.ascontiguousarray(net.params[name], dtype="<f4")
        raw = arr.tobytes()
        directory.append({"name": name, "shape": list(arr.shape), "dtype": "<f4",
                          "offset": offset, "length": len(raw)})
        chunks.append(raw + b"\x00" * _pad(len(raw)))
        offset += len(raw) + _pad(len(raw))
    header = {
        "format": "bwvnet",
        "version": VERSION,
        "activation": net.spec.activation,
        "spec": net.spec.to_dict(),
        "tensors": directory,
        "blob_length": offset,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    hbytes += b" " * _pad(len(hbytes))
    return MAGIC + struct.pack("<Q", len(hbytes)) + hbytes + b"".join(chunks)


def from_bytes(data):
    if len(data) < 16 or data[:8] != MAGIC:
        raise FormatError("not a bwvnet file (bad magic)", field="magic")
    (hlen,) = struct.unpack("<Q", data[8:16])
    if 16 + hlen > len(data):
        raise FormatError(f"header length {hlen} exceeds file size", field="header_length")
    try:
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt header: {exc}", field="header") from exc
    if not isinstance(header, dict) or header.get("format") != "bwvnet":
        raise FormatError("header does not describe a bwvnet model", field="format")
    if header.get("version") != VERSION:
        raise FormatError(f"unsupported version {header.get('version')!r}", field="version")
    for key in ("spec", "tensors", "blob_length", "activation"):
        if key not in header:
            raise FormatError(f"header is missing {key!r}", field=key)

    blob = data[16 + hlen:]
    if len(blob) != header["blob_length"]:
        raise FormatError(
            f"blob length mismatch: header says {header['blob_length']} bytes, found {len(blob)}",
            field="blob_length")
    try:
        spec = NetworkSpec.from_dict(header["spec"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid spec: {exc}", field="spec") from exc
    if spec.activation != header["activation"]:
        raise FormatError("activation disagrees with spec", field="activation")

    params = {}
    for entry in header["tensors"]:
        name = entry.get("name", "?")
        off, length, shape = entry.get("offset"), entry.get("length"), entry.get("shape")
        if entry.get("dtype") != "<f4":
            raise FormatError(f"tensor {name}: unsupported dtype {entry.get('dtype')!r}", field=f"tensors.{name}.dtype")
        if not isinstance(off, int) or off % _ALIGN:
            raise FormatError(f"tensor {name}: offset {off!r} is not 8-byte aligned", field=f"tensors.{name}.offset")
        if length != 4 * int(np.prod(shape)) or off + length > len(blob):
            raise FormatError(f"tensor {name}: length {length} inconsistent with shape {shape} or blob",
                              field=f"tensors.{name}.length")
        params[name] = np.frombuffer(blob, dtype="<f4", count=length // 4, offset=off).reshape(shape).astype(np.float32)

    net = Network(spec, params)
    expected = {layer.pname(k): s for layer in net.layers for k, s in layer.param_shapes().items()}
    for name, shape in expected.items():
        if name not in params:
            raise FormatError(f"missing tensor {name}", field=f"tensors.{name}")
        if params[name].shape != tuple(shape):
            raise FormatError(f"tensor {name} has shape {params[name].shape}, expected {shape}",
                              field=f"tensors.{name}.shape")
    return net


def save(net, path):
    data = to_bytes(net)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
