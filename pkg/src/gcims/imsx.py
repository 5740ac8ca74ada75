"""IMSX spectrum container.

Layout (little-endian throughout)::

    offset 0   4 bytes   magic b"IMSX"
    offset 4   u16       format version (1)
    offset 6   u32       header length N
    offset 10  N bytes   UTF-8 JSON object: sample_id, drift_axis,
                         retention_axis, optional label
    offset 10+N          rows*cols float32, row-major (retention-major)

The file ends exactly at the end of the payload.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .core import Axis, IMSSpectrum, SampleLabel
from .errors import BadMagic, MalformedHeader, TruncatedPayload, UnsupportedVersion

MAGIC = b"IMSX"
VERSION = 1
_PREFIX = struct.Struct("<4sHI")
PAYLOAD_DTYPE = np.dtype("<f4")

PathLike = Union[str, os.PathLike]


def encode_header(spectrum: IMSSpectrum, label: Optional[SampleLabel] = None) -> bytes:
    header = {
        "sample_id": spectrum.sample_id,
        "drift_axis": spectrum.drift_axis.to_dict(),
        "retention_axis": spectrum.retention_axis.to_dict(),
    }
    if label is not None:
        header["label"] = SampleLabel(label).value
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def to_bytes(spectrum: IMSSpectrum, label: Optional[SampleLabel] = None) -> bytes:
    header = encode_header(spectrum, label)
    payload = np.ascontiguousarray(spectrum.intensity, dtype=PAYLOAD_DTYPE).tobytes()
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + payload


def write_imsx(spectrum: IMSSpectrum, destination: PathLike,
               label: Optional[SampleLabel] = None) -> int:
    """Write ``spectrum`` atomically and return the number of bytes written.

    Intensities are narrowed to float32. The data goes to a temporary file in
    the destination directory first, so a failed write leaves nothing behind.
    """
    data = to_bytes(spectrum, label)
    destination = Path(destination)
    fd, tmp = tempfile.mkstemp(prefix=".imsx-", dir=destination.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, destination)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(data)


def _parse_header(raw: bytes) -> dict:
    offset = _PREFIX.size
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeader(f"header at byte {offset} is not valid UTF-8 JSON: {exc}") from None
    if not isinstance(header, dict):
        raise MalformedHeader(f"header at byte {offset} is not a JSON object")
    for key in ("sample_id", "drift_axis", "retention_axis"):
        if key not in header:
            raise MalformedHeader(f"header at byte {offset} lacks {key!r}")
    try:
        header["drift_axis"] = Axis.from_dict(header["drift_axis"])
        header["retention_axis"] = Axis.from_dict(header["retention_axis"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedHeader(f"bad axis descriptor in header at byte {offset}: {exc}") from None
    if "label" in header:
        try:
            header["label"] = SampleLabel(header["label"])
        except ValueError:
            raise MalformedHeader(f"unknown label {header['label']!r} in header at byte {offset}") from None
    if not isinstance(header["sample_id"], str):
        raise MalformedHeader(f"sample_id in header at byte {offset} is not a string")
    return header


def from_bytes(data: bytes) -> tuple[IMSSpectrum, Optional[SampleLabel]]:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"bad magic at byte 0: {data[:4]!r} (expected {MAGIC!r})")
    if len(data) < _PREFIX.size:
        raise TruncatedPayload(f"file ends at byte {len(data)} inside the {_PREFIX.size}-byte prefix")
    _, version, header_len = _PREFIX.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersion(f"format version {version} at byte 4 (supported: {VERSION})")
    header_end = _PREFIX.size + header_len
    if len(data) < header_end:
        raise MalformedHeader(
            f"header declares {header_len} bytes at byte 6 but file ends at byte {len(data)}")
    header = _parse_header(data[_PREFIX.size:header_end])
    rows, cols = header["retention_axis"].count, header["drift_axis"].count
    expected = PAYLOAD_DTYPE.itemsize * rows * cols
    got = len(data) - header_end
    if got != expected:
        raise TruncatedPayload(
            f"payload starting at byte {header_end} has {got} bytes, expected {expected} "
            f"({rows}x{cols} float32)")
    values = np.frombuffer(data, dtype=PAYLOAD_DTYPE, offset=header_end).reshape(rows, cols)
    spectrum = IMSSpectrum(header["drift_axis"], header["retention_axis"],
                           values.astype(np.float64), header["sample_id"])
    return spectrum, header.get("label")


def read_imsx(source: PathLike) -> IMSSpectrum:
    return read_imsx_labeled(source)[0]


def read_imsx_labeled(source: PathLike) -> tuple[IMSSpectrum, Optional[SampleLabel]]:
    """Like :func:`read_imsx` but also return the optional header label."""
    with open(source, "rb") as fh:
        return from_bytes(fh.read())
