"""Event-based spike data: ingestion, binning, rasterization, canonical storage.

Raw recordings are streams of timestamped per-channel events. The network
consumes dense binary [T x channels] frames, so this module provides the
bridge in both directions plus a lossless canonical file format and a JSON
dataset manifest.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DataFormatError

# N-MNIST sensor geometry: 34x34 pixels, 2 polarities folded into the channel index.
NMNIST_SIDE = 34
NMNIST_CHANNELS = NMNIST_SIDE * NMNIST_SIDE * 2

# Canonical event files store microsecond timestamps.
CANONICAL_UNIT_NS = 1000

_MAGIC = b"SPKE"
_VERSION = 1
_HEADER = struct.Struct("<4sHIIQ")
_RECORD_DTYPE = np.dtype([("time", "<u8"), ("channel", "<u4")])


@dataclass(frozen=True)
class EventStream:
    """Ordered spike events on a fixed set of channels.

    times are integer ticks of `timestamp_unit_ns` nanoseconds, sorted
    non-decreasing; channels index into [0, num_channels).
    """

    num_channels: int
    timestamp_unit_ns: int
    times: np.ndarray
    channels: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.uint64)
        channels = np.asarray(self.channels, dtype=np.uint32)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "channels", channels)
        if self.num_channels <= 0:
            raise ArgumentError("num_channels must be positive")
        if times.shape != channels.shape or times.ndim != 1:
            raise ArgumentError("times and channels must be 1-D arrays of equal length")
        if times.size:
            if channels.max() >= self.num_channels:
                raise ArgumentError(
                    f"channel index {int(channels.max())} outside [0, {self.num_channels})"
                )
            if np.any(np.diff(times.astype(np.int64)) < 0):
                raise ArgumentError("event times must be non-decreasing")

    @property
    def num_events(self) -> int:
        return int(self.times.size)

    @property
    def duration_ticks(self) -> int:
        """Ticks spanned by the stream: last event time + 1 (0 when empty)."""
        return int(self.times[-1]) + 1 if self.times.size else 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.num_channels == other.num_channels
            and self.timestamp_unit_ns == other.timestamp_unit_ns
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.channels, other.channels)
        )


@dataclass(frozen=True)
class SpikeFrames:
    """Dense [T x channels] spike tensor; binary {0,1} or non-negative counts."""

    values: np.ndarray
    binary: bool = True

    def __post_init__(self):
        values = np.asarray(self.values)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise ArgumentError("values must be a [T x channels] matrix")
        if values.size and values.min() < 0:
            raise ArgumentError("spike counts must be non-negative")
        if self.binary and values.size and values.max() > 1:
            raise ArgumentError("binary frames must contain only 0 and 1")

    @property
    def num_steps(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]


def parse_nmnist_bin(raw: bytes) -> EventStream:
    """Decode an N-MNIST AER sample (5 bytes per event, big-endian bit order).

    Layout per record: byte0 = x, byte1 = y, byte2 bit7 = polarity,
    byte2 bits6-0 || byte3 || byte4 = 23-bit timestamp in microseconds.
    The polarity is folded into the channel index: channel = y*68 + x*2 + p.
    """
    if len(raw) % 5 != 0:
        raise DataFormatError(
            f"truncated record: {len(raw)} bytes is not a multiple of 5 "
            f"(partial record starts at byte offset {len(raw) - len(raw) % 5})"
        )
    data = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 5)
    if data.shape[0] == 0:
        return EventStream(NMNIST_CHANNELS, CANONICAL_UNIT_NS, np.empty(0), np.empty(0))
    x = data[:, 0].astype(np.uint32)
    y = data[:, 1].astype(np.uint32)
    bad = np.nonzero((x >= NMNIST_SIDE) | (y >= NMNIST_SIDE))[0]
    if bad.size:
        i = int(bad[0])
        raise DataFormatError(
            f"malformed record {i}: pixel ({int(x[i])}, {int(y[i])}) outside 34x34 sensor"
        )
    polarity = (data[:, 2] >> 7).astype(np.uint32)
    t = (
        (data[:, 2].astype(np.uint64) & 0x7F) << 16
        | data[:, 3].astype(np.uint64) << 8
        | data[:, 4].astype(np.uint64)
    )
    channel = y * (NMNIST_SIDE * 2) + x * 2 + polarity
    order = np.argsort(t, kind="stable")
    return EventStream(NMNIST_CHANNELS, CANONICAL_UNIT_NS, t[order], channel[order])


def bin_events(stream: EventStream, num_steps: int, mode: str = "binary") -> SpikeFrames:
    """Split the sample duration into `num_steps` equal bins of ceil(duration/T) ticks.

    Binary mode ORs events per (bin, channel); count mode sums them.
    """
    if num_steps < 1:
        raise ArgumentError("num_steps must be >= 1")
    if mode not in ("binary", "count"):
        raise ArgumentError(f"unknown binning mode {mode!r}")
    counts = np.zeros((num_steps, stream.num_channels), dtype=np.int64)
    if stream.num_events:
        dt = max(1, math.ceil(stream.duration_ticks / num_steps))
        idx = (stream.times // dt).astype(np.int64)
        np.add.at(counts, (idx, stream.channels.astype(np.int64)), 1)
    if mode == "binary":
        return SpikeFrames(np.minimum(counts, 1).astype(np.uint8), binary=True)
    return SpikeFrames(counts, binary=False)


def image_to_raster(
    image: np.ndarray, threshold: float = 0.5, num_steps: int = 300, num_trains: int = 300
) -> SpikeFrames:
    """Turn a grayscale image into a spatio-temporal spike raster.

    The image is nearest-neighbor rescaled to (num_trains, num_steps); a pixel
    at scaled position (x, y) with intensity >= threshold becomes a spike in
    train y at time x.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise ArgumentError("image must be a non-empty 2-D array")
    h, w = image.shape
    if num_steps < w or num_trains < h:
        raise ArgumentError(
            f"target raster {num_trains}x{num_steps} smaller than source image {h}x{w}"
        )
    rows = (np.arange(num_trains) * h // num_trains).astype(np.intp)
    cols = (np.arange(num_steps) * w // num_steps).astype(np.intp)
    scaled = image[np.ix_(rows, cols)]
    frames = (scaled.T >= threshold).astype(np.uint8)
    return SpikeFrames(frames, binary=True)


def save_canonical(stream: EventStream) -> bytes:
    """Serialize an EventStream to the canonical little-endian byte layout."""
    header = _HEADER.pack(
        _MAGIC, _VERSION, stream.num_channels, stream.timestamp_unit_ns, stream.num_events
    )
    records = np.empty(stream.num_events, dtype=_RECORD_DTYPE)
    records["time"] = stream.times
    records["channel"] = stream.channels
    return header + records.tobytes()


def load_canonical(raw: bytes) -> EventStream:
    """Parse canonical bytes back into an EventStream; validates integrity."""
    if len(raw) < _HEADER.size:
        raise DataFormatError("canonical stream shorter than header")
    magic, version, num_channels, unit_ns, count = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise DataFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise DataFormatError(f"unsupported canonical version {version}")
    payload = raw[_HEADER.size:]
    if len(payload) != count * _RECORD_DTYPE.itemsize:
        raise DataFormatError(
            f"declared {count} events but payload holds "
            f"{len(payload) // _RECORD_DTYPE.itemsize}"
        )
    records = np.frombuffer(payload, dtype=_RECORD_DTYPE)
    try:
        return EventStream(num_channels, unit_ns, records["time"], records["channel"])
    except ArgumentError as exc:
        raise DataFormatError(f"canonical payload invalid: {exc}") from exc


def write_manifest(path, samples: list[dict], num_channels: int) -> None:
    """Write the dataset manifest: sample paths, labels, and channel count."""
    doc = {"num_channels": int(num_channels), "samples": samples}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_manifest(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read manifest {path}: {exc}") from exc
    if "num_channels" not in doc or "samples" not in doc:
        raise DataFormatError(f"manifest {path} missing num_channels or samples")
    return doc


def load_dataset(manifest_path, num_steps: int, mode: str = "binary"):
    """Load every sample of a manifest into (frames [N,T,C], labels [N])."""
    manifest_path = Path(manifest_path)
    doc = read_manifest(manifest_path)
    base = manifest_path.parent
    frames, labels = [], []
    for entry in doc["samples"]:
        try:
            raw = (base / entry["path"]).read_bytes()
        except OSError as exc:
            raise DataFormatError(f"cannot read sample {entry['path']}: {exc}") from exc
        stream = load_canonical(raw)
        if stream.num_channels != doc["num_channels"]:
            raise DataFormatError(
                f"sample {entry['path']} has {stream.num_channels} channels, "
                f"manifest declares {doc['num_channels']}"
            )
        frames.append(bin_events(stream, num_steps, mode).values)
        labels.append(int(entry.get("label", -1)))
    x = np.stack(frames).astype(np.float64) if frames else np.zeros((0, num_steps, doc["num_channels"]))
    y = np.asarray(labels, dtype=np.int64)
    return x, y


def frames_to_stream(frames: SpikeFrames, timestamp_unit_ns: int = CANONICAL_UNIT_NS) -> EventStream:
    """Inverse of binning at one tick per step: each set bin becomes one event."""
    t_idx, ch_idx = np.nonzero(frames.values)
    order = np.argsort(t_idx, kind="stable")
    return EventStream(
        frames.num_channels, timestamp_unit_ns, t_idx[order].astype(np.uint64),
        ch_idx[order].astype(np.uint32),
    )
