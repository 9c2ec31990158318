"""Netpbm (PGM/PPM) reading and writing.

Supports the four raster flavours the toolkit exchanges with the outside
world: P2/P5 greyscale and P3/P6 colour, with maxval up to 65535. Binary
16-bit samples are big-endian, as the netpbm convention demands. Parse
failures raise distinct exception types that name the byte offset at which
the problem was detected.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np


class PnmParseError(ValueError):
    """Base class for PGM/PPM parse failures; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class UnsupportedMagicError(PnmParseError):
    """The file does not start with one of P2, P3, P5, P6."""


class MalformedHeaderError(PnmParseError):
    """Width, height or maxval is missing, non-numeric, or out of range."""


class TruncatedPayloadError(PnmParseError):
    """The raster ends before width * height * channels samples."""


class InvalidSampleError(PnmParseError):
    """A raster sample is non-numeric or exceeds the declared maxval."""


_MAGIC_CHANNELS = {b"P2": 1, b"P3": 3, b"P5": 1, b"P6": 3}
_ASCII_MAGIC = (b"P2", b"P3")
_WHITESPACE = b" \t\n\r\x0b\x0c"


class _Cursor:
    """Byte-offset-tracking tokenizer over the header and ASCII rasters."""

    __slots__ = ("data", "pos")

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_separators(self) -> None:
        data = self.data
        n = len(data)
        while self.pos < n:
            byte = data[self.pos]
            if byte in _WHITESPACE:
                self.pos += 1
            elif byte == 0x23:  # '#' comment runs to end of line
                newline = data.find(b"\n", self.pos)
                self.pos = n if newline < 0 else newline + 1
            else:
                break

    def token(self, what: str) -> tuple[bytes, int]:
        self.skip_separators()
        data = self.data
        n = len(data)
        if self.pos >= n:
            raise TruncatedPayloadError(f"file ended while reading {what}", n)
        start = self.pos
        while self.pos < n and data[self.pos] not in _WHITESPACE and data[self.pos] != 0x23:
            self.pos += 1
        return data[start:self.pos], start

    def int_token(self, what: str, low: int, high: int) -> int:
        tok, offset = self.token(what)
        try:
            value = int(tok)
        except ValueError:
            raise MalformedHeaderError(f"{what} is not an integer: {tok!r}", offset) from None
        if not low <= value <= high:
            raise MalformedHeaderError(f"{what} {value} outside [{low}, {high}]", offset)
        return value


def read_pnm(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a PGM/PPM file.

    Returns
    -------
    samples : np.ndarray
        Integer array of shape (height, width, channels), channels 1 or 3.
    maxval : int
        The declared maximum sample value (1..65535).
    """
    data = Path(path).read_bytes()
    if len(data) < 2:
        raise UnsupportedMagicError("file too short for a magic number", 0)
    magic = bytes(data[:2])
    if magic not in _MAGIC_CHANNELS:
        raise UnsupportedMagicError(f"unsupported magic {magic!r}", 0)
    channels = _MAGIC_CHANNELS[magic]

    cur = _Cursor(data, pos=2)
    width = cur.int_token("width", 1, 1 << 20)
    height = cur.int_token("height", 1, 1 << 20)
    maxval = cur.int_token("maxval", 1, 65535)
    count = width * height * channels

    if magic in _ASCII_MAGIC:
        flat = np.empty(count, dtype=np.int64)
        for i in range(count):
            tok, offset = cur.token("raster sample")
            try:
                value = int(tok)
            except ValueError:
                raise InvalidSampleError(f"sample is not an integer: {tok!r}", offset) from None
            if not 0 <= value <= maxval:
                raise InvalidSampleError(f"sample {value} exceeds maxval {maxval}", offset)
            flat[i] = value
    else:
        # Binary raster: exactly one whitespace byte separates maxval and payload.
        if cur.pos >= len(data) or data[cur.pos] not in _WHITESPACE:
            raise MalformedHeaderError("missing whitespace before binary raster", cur.pos)
        start = cur.pos + 1
        itemsize = 1 if maxval < 256 else 2
        need = count * itemsize
        if len(data) - start < need:
            raise TruncatedPayloadError(
                f"raster needs {need} bytes, only {len(data) - start} present", len(data)
            )
        dtype = np.uint8 if itemsize == 1 else np.dtype(">u2")
        flat = np.frombuffer(data, dtype=dtype, count=count, offset=start).astype(np.int64)
        bad = np.nonzero(flat > maxval)[0]
        if bad.size:
            raise InvalidSampleError(
                f"sample {int(flat[bad[0]])} exceeds maxval {maxval}",
                start + int(bad[0]) * itemsize,
            )

    return flat.reshape(height, width, channels), maxval


def write_pnm(path: str | Path, samples: np.ndarray, maxval: int = 255, ascii_format: bool = False) -> None:
    """Write integer samples of shape (height, width, channels) as PGM/PPM.

    One channel selects PGM (P5, or P2 when ``ascii_format``), three channels
    PPM (P6/P3). Samples must already lie in [0, maxval].
    """
    samples = np.asarray(samples)
    if samples.ndim != 3 or samples.shape[2] not in (1, 3):
        raise ValueError(f"expected (height, width, 1|3) samples, got shape {samples.shape}")
    if samples.min() < 0 or samples.max() > maxval:
        raise ValueError("samples outside [0, maxval]")
    height, width, channels = samples.shape
    if ascii_format:
        magic = "P2" if channels == 1 else "P3"
    else:
        magic = "P5" if channels == 1 else "P6"

    header = f"{magic}\n{width} {height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as handle:
        handle.write(header)
        flat = samples.reshape(-1)
        if ascii_format:
            # Keep lines under the 70-character netpbm limit (11 samples of
            # at most 5 digits plus separators).
            per_line = 11
            lines = []
            for i in range(0, flat.size, per_line):
                lines.append(" ".join(str(int(v)) for v in flat[i:i + per_line]))
            handle.write(("\n".join(lines) + "\n").encode("ascii"))
        else:
            dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
            handle.write(flat.astype(dtype).tobytes())
