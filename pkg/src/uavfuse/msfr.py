"""MSFR binary persistence for recordings and fused datasets.

Recording file, little-endian throughout:

    magic    4s   "MSFR"
    version  u16  1
    modality u8   0 thermal, 1 optronic, 2 radar (3 marks a fused dataset)
    id_len   u16  followed by the UTF-8 recording id
    ndims    u8   followed by one u32 per dimension (per-sample feature shape)
    count    u32
    per sample: timestamp f64, label u8 (1 UAV, 0 false alarm),
                features as f32 values, row-major

Fused dataset file: same framing with modality byte 3, then a modality
count u8 (1, 2 or 3), the provenance string in the id slot, and TWO shape
blocks (stacked tensor, then radar vector; the radar block is ndims=1 with
dim 0 when the dataset carries no radar channel). Each sample stores both
payloads back to back.

A dataset directory holds MSFR files plus ``manifest.tsv``: one record per
line, tab-separated ``filename<TAB>kind<TAB>sample_count``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .data import (
    DetectionSample,
    FusedDataset,
    FusedSample,
    Label,
    Modality,
    ModalitySet,
    Recording,
)
from .errors import CorruptionError, FormatError, ValidationError

MAGIC = b"MSFR"
VERSION = 1
FUSED_MODALITY_BYTE = 3
MANIFEST_NAME = "manifest.tsv"

_SET_BY_COUNT = {
    1: ModalitySet.THERMAL,
    2: ModalitySet.THERMAL_OPTRONIC,
    3: ModalitySet.THERMAL_OPTRONIC_RADAR,
}


def _shape_block(shape: tuple[int, ...]) -> bytes:
    return struct.pack("<B", len(shape)) + struct.pack(f"<{len(shape)}I", *shape)


def _id_block(text: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValidationError(f"recording id of {len(raw)} bytes exceeds the u16 limit")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    """Offset-tracked parser that treats any short read as corruption."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptionError(
                f"file truncated: needed {n} bytes at offset {self.pos}, "
                f"have {len(self.buf) - self.pos}"
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def shape(self) -> tuple[int, ...]:
        (ndims,) = self.unpack("<B")
        return tuple(self.unpack(f"<{ndims}I")) if ndims else ()

    def text(self) -> str:
        (n,) = self.unpack("<H")
        return self.take(n).decode("utf-8")

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise CorruptionError(
                f"{len(self.buf) - self.pos} trailing bytes after declared payload"
            )


def _features(reader: _Reader, shape: tuple[int, ...]) -> np.ndarray:
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    raw = reader.take(4 * count)
    return np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)


def _label(byte: int) -> Label:
    if byte not in (0, 1):
        raise CorruptionError(f"label byte must be 0 or 1, got {byte}")
    return Label(byte)


def _check_header(reader: _Reader, expect_fused: bool) -> None:
    magic = reader.take(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = reader.unpack("<H")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    (modality_byte,) = reader.unpack("<B")
    if expect_fused:
        if modality_byte != FUSED_MODALITY_BYTE:
            raise FormatError(
                f"modality byte {modality_byte} is a plain recording, not a fused dataset"
            )
    elif modality_byte == FUSED_MODALITY_BYTE:
        raise FormatError("modality byte 3 marks a fused dataset, not a plain recording")
    elif modality_byte not in (0, 1, 2):
        raise FormatError(f"modality byte {modality_byte} is not a recording modality")
    reader.pos -= 1  # caller re-reads the modality byte


def write_recording(recording: Recording, destination) -> int:
    """Serialize one recording; returns the byte count written."""
    recording.validate()
    parts = [
        MAGIC,
        struct.pack("<H", VERSION),
        struct.pack("<B", int(recording.modality)),
        _id_block(recording.recording_id),
        _shape_block(tuple(recording.feature_shape)),
        struct.pack("<I", len(recording.samples)),
    ]
    for sample in recording.samples:
        parts.append(struct.pack("<dB", sample.timestamp, int(sample.label)))
        parts.append(np.ascontiguousarray(sample.features, dtype="<f4").tobytes())
    blob = b"".join(parts)
    Path(destination).write_bytes(blob)
    return len(blob)


def read_recording(source) -> Recording:
    """Parse and validate one recording file (exact inverse of write_recording)."""
    reader = _Reader(Path(source).read_bytes())
    _check_header(reader, expect_fused=False)
    (modality_byte,) = reader.unpack("<B")
    recording_id = reader.text()
    shape = reader.shape()
    (count,) = reader.unpack("<I")
    samples = []
    for _ in range(count):
        ts, label_byte = reader.unpack("<dB")
        samples.append(DetectionSample(ts, _label(label_byte), _features(reader, shape)))
    reader.done()
    recording = Recording(Modality(modality_byte), recording_id, samples, shape)
    recording.validate()
    return recording


def write_fused(dataset: FusedDataset, destination) -> int:
    """Serialize a fused dataset; returns the byte count written."""
    dataset.validate()
    radar_shape = (dataset.radar_len,) if dataset.radar_len else (0,)
    parts = [
        MAGIC,
        struct.pack("<H", VERSION),
        struct.pack("<BB", FUSED_MODALITY_BYTE, dataset.modality_set.count),
        _id_block(",".join(dataset.provenance)),
        _shape_block(tuple(dataset.stacked_shape)),
        _shape_block(radar_shape),
        struct.pack("<I", len(dataset.samples)),
    ]
    for sample in dataset.samples:
        ts = sample.timestamps.get("thermal", sample.timestamps.get("fused", 0.0))
        parts.append(struct.pack("<dB", ts, int(sample.label)))
        parts.append(np.ascontiguousarray(sample.stacked, dtype="<f4").tobytes())
        if dataset.radar_len:
            parts.append(np.ascontiguousarray(sample.radar, dtype="<f4").tobytes())
    blob = b"".join(parts)
    Path(destination).write_bytes(blob)
    return len(blob)


def read_fused(source) -> FusedDataset:
    """Parse and validate one fused dataset file."""
    reader = _Reader(Path(source).read_bytes())
    _check_header(reader, expect_fused=True)
    _, modality_count = reader.unpack("<BB")
    if modality_count not in _SET_BY_COUNT:
        raise CorruptionError(f"modality count must be 1..3, got {modality_count}")
    provenance_text = reader.text()
    stacked_shape = reader.shape()
    radar_shape = reader.shape()
    radar_len = int(np.prod(radar_shape, dtype=np.int64)) if radar_shape else 0
    (count,) = reader.unpack("<I")
    samples = []
    for _ in range(count):
        ts, label_byte = reader.unpack("<dB")
        stacked = _features(reader, stacked_shape)
        radar = _features(reader, (radar_len,)) if radar_len else None
        samples.append(
            FusedSample(stacked, radar, _label(label_byte), timestamps={"fused": ts})
        )
    reader.done()
    provenance = provenance_text.split(",") if provenance_text else []
    dataset = FusedDataset(
        _SET_BY_COUNT[modality_count], samples, provenance, stacked_shape, radar_len
    )
    dataset.validate()
    return dataset


def write_manifest(directory, entries: list[tuple[str, str, int]]) -> Path:
    """Write manifest.tsv: one ``filename<TAB>kind<TAB>count`` line per file."""
    path = Path(directory) / MANIFEST_NAME
    lines = [f"{name}\t{kind}\t{count}\n" for name, kind, count in entries]
    path.write_text("".join(lines), encoding="utf-8")
    return path


def read_manifest(directory) -> list[tuple[str, str, int]]:
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        raise FormatError(f"no {MANIFEST_NAME} in {directory}")
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(f"manifest line {lineno}: expected 3 tab-separated fields")
        entries.append((fields[0], fields[1], int(fields[2])))
    return entries
