"""Text and binary bank formats, plus the JSON manifest.

Text::

    VOROBANK1 <n_samples> <n_dims> <n_views> <n_classes> <split>
    view <id> <provenance>            (one line per view)
    <label> v1 v2 ... vn              (n_samples lines per view, 9 significant digits)

Binary (little endian, no padding)::

    b"VBNK" u16 version=1
    u32 n_samples, u32 n_dims, u32 n_views, u32 n_classes, u8 split
    per view: u32 id, u16 byte length, UTF-8 provenance
    u32 labels[n_samples]
    per view: f32[n_samples * n_dims] row-major

Nine significant digits round-trip float32 exactly, so both formats are
lossless for banks (which are stored as float32).
"""
from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import BankFormatError, DataError
from .bank import SPLITS, FeatureBank, View

TEXT_MAGIC = "VOROBANK1"
BIN_MAGIC = b"VBNK"
BIN_VERSION = 1
_HEADER = struct.Struct("<4sHIIIIB")


def _format_text(bank: FeatureBank) -> str:
    out = io.StringIO()
    out.write(f"{TEXT_MAGIC} {bank.n_samples} {bank.dim} {bank.n_views} "
              f"{bank.n_classes} {bank.split}\n")
    for v in bank.views:
        out.write(f"view {v.id} {v.provenance}\n")
    labels = [str(int(x)) for x in bank.labels]
    for view in bank.features:
        for label, row in zip(labels, view):
            out.write(label)
            for x in row:
                out.write(" %.9g" % float(x))
            out.write("\n")
    return out.getvalue()


def _format_binary(bank: FeatureBank) -> bytes:
    parts = [_HEADER.pack(BIN_MAGIC, BIN_VERSION, bank.n_samples, bank.dim, bank.n_views,
                          bank.n_classes, SPLITS.index(bank.split))]
    for v in bank.views:
        raw = v.provenance.encode("utf-8")
        parts.append(struct.pack("<IH", v.id, len(raw)))
        parts.append(raw)
    parts.append(bank.labels.astype("<u4").tobytes())
    parts.append(bank.features.astype("<f4").tobytes(order="C"))
    return b"".join(parts)


def save_bank(bank: FeatureBank, path, fmt: str | None = None) -> None:
    """Write ``bank``; ``fmt`` is ``"text"`` or ``"binary"`` (default from suffix)."""
    path = Path(path)
    if fmt is None:
        fmt = "text" if path.suffix == ".txt" else "binary"
    if fmt == "text":
        path.write_bytes(_format_text(bank).encode("ascii"))
    elif fmt == "binary":
        path.write_bytes(_format_binary(bank))
    else:
        raise ValueError(f"unknown bank format {fmt!r}")


def _parse_binary(data: bytes) -> FeatureBank:
    if len(data) < _HEADER.size:
        raise BankFormatError(
            f"truncated header: expected at least {_HEADER.size} bytes, got {len(data)}",
            "byte 0")
    magic, version, n_samples, n_dims, n_views, n_classes, split = _HEADER.unpack_from(data, 0)
    if version != BIN_VERSION:
        raise BankFormatError(f"unsupported version {version}", "byte 4")
    if split >= len(SPLITS):
        raise BankFormatError(f"bad split tag {split}", f"byte {_HEADER.size - 1}")
    pos = _HEADER.size
    views = []
    for _ in range(n_views):
        if pos + 6 > len(data):
            raise BankFormatError(
                f"truncated view table: expected at least {pos + 6} bytes, got {len(data)}",
                f"byte {pos}")
        vid, length = struct.unpack_from("<IH", data, pos)
        pos += 6
        raw = data[pos:pos + length]
        if len(raw) != length:
            raise BankFormatError(
                f"truncated view table: expected at least {pos + length} bytes, got {len(data)}",
                f"byte {pos}")
        try:
            views.append(View(vid, raw.decode("utf-8")))
        except UnicodeDecodeError as exc:
            raise BankFormatError(f"view descriptor is not UTF-8: {exc}", f"byte {pos}") from None
        pos += length
    expected = pos + 4 * n_samples + 4 * n_views * n_samples * n_dims
    if len(data) != expected:
        kind = "truncated payload" if len(data) < expected else "trailing bytes"
        raise BankFormatError(f"{kind}: expected {expected} bytes, got {len(data)}",
                              f"byte {min(len(data), expected)}")
    labels = np.frombuffer(data, dtype="<u4", count=n_samples, offset=pos).astype(np.int64)
    pos += 4 * n_samples
    feats = np.frombuffer(data, dtype="<f4", count=n_views * n_samples * n_dims, offset=pos)
    feats = feats.reshape(n_views, n_samples, n_dims).astype(np.float32)
    return FeatureBank(feats, labels, n_classes, tuple(views), SPLITS[split])


def _parse_text(text: str) -> FeatureBank:
    lines = text.splitlines()

    def fail(msg, lineno):
        raise BankFormatError(msg, f"line {lineno}")

    if not lines:
        fail("empty file", 1)
    head = lines[0].split()
    if len(head) != 6 or head[0] != TEXT_MAGIC:
        fail(f"expected header '{TEXT_MAGIC} <n_samples> <n_dims> <n_views> <n_classes> <split>'", 1)
    try:
        n_samples, n_dims, n_views, n_classes = (int(x) for x in head[1:5])
    except ValueError:
        fail("header counts must be integers", 1)
    split = head[5]
    if split not in SPLITS:
        fail(f"unknown split tag {split!r}", 1)
    expected_lines = 1 + n_views + n_views * n_samples
    body = [ln for ln in lines if ln.strip()]
    if len(body) != expected_lines:
        fail(f"expected {expected_lines} non-empty lines, got {len(body)}", len(lines))
    views = []
    for i in range(n_views):
        lineno = 2 + i
        parts = body[1 + i].split(maxsplit=2)
        if len(parts) != 3 or parts[0] != "view":
            fail("expected 'view <id> <provenance>'", lineno)
        try:
            views.append(View(int(parts[1]), parts[2]))
        except ValueError:
            fail(f"bad view id {parts[1]!r}", lineno)
    feats = np.empty((n_views, n_samples, n_dims), dtype=np.float32)
    labels = np.empty(n_samples, dtype=np.int64)
    row = 1 + n_views
    for v in range(n_views):
        for s in range(n_samples):
            lineno = row + 1
            parts = body[row].split()
            row += 1
            if len(parts) != n_dims + 1:
                fail(f"expected label plus {n_dims} values, got {len(parts)} fields", lineno)
            try:
                label = int(parts[0])
                values = [float(x) for x in parts[1:]]
            except ValueError as exc:
                fail(f"unparseable number: {exc}", lineno)
            if v == 0:
                labels[s] = label
            elif labels[s] != label:
                fail(f"label {label} disagrees with view 0 label {labels[s]}", lineno)
            feats[v, s] = values
    return FeatureBank(feats, labels, n_classes, tuple(views), split)


def load_bank(path) -> FeatureBank:
    """Read a bank in either format (detected from the magic bytes)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"bank file not found: {path}")
    data = path.read_bytes()
    if data.startswith(BIN_MAGIC):
        return _parse_binary(data)
    if data.startswith(TEXT_MAGIC.encode()):
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise BankFormatError("text bank is not ASCII", f"byte {exc.start}") from None
        return _parse_text(text)
    raise BankFormatError("unrecognised bank magic", "byte 0")


def write_manifest(path, name: str, splits: dict, notes: str = "", **extra) -> None:
    doc = {"name": name, "splits": dict(splits), "provenance": notes, **extra}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    path = Path(path)
    doc = json.loads(path.read_text())
    if "splits" not in doc or not isinstance(doc["splits"], dict):
        raise DataError(f"{path}: manifest needs a 'splits' mapping")
    doc["splits"] = {k: str((path.parent / v).resolve()) for k, v in doc["splits"].items()}
    return doc
