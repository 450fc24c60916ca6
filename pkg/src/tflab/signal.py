"""Signals on the cyclic grid of n = 2**L samples.

The spatial domain is [0, 1) sampled at x_j = j/n, so every Riemann sum
carries the weight 1/n and the domain has unit measure.  Spectra are stored
in *centered* order: array position ``i`` holds integer frequency
``m = i - n/2``, so frequencies run from -n/2 to n/2 - 1 and any frequency
interval is a contiguous slice.

Normalization::

    fhat(m) = (1/n) * sum_x f(x) exp(-2 pi i m x / n)
    f(x)    =         sum_m fhat(m) exp(+2 pi i m x / n)

so that ``sum |fhat|**2 == mean |f|**2`` (Parseval).
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParameterError

MIN_LOG_SIZE = 3
MAX_LOG_SIZE = 20
BINARY_MAGIC = b"TFSIG01\x00"


def log_size(n: int) -> int:
    """Return L with n = 2**L, raising ConfigurationError otherwise."""
    n = int(n)
    if n <= 0 or n & (n - 1):
        raise ConfigurationError(f"grid length {n} is not a power of two", key="n")
    L = n.bit_length() - 1
    if not MIN_LOG_SIZE <= L <= MAX_LOG_SIZE:
        raise ConfigurationError(
            f"grid length 2**{L} outside [2**{MIN_LOG_SIZE}, 2**{MAX_LOG_SIZE}]", key="n"
        )
    return L


def as_samples(f) -> np.ndarray:
    """Coerce a Signal or array-like to a 1-D complex array (no copy if possible)."""
    if isinstance(f, Signal):
        return f.samples
    return np.asarray(f, dtype=complex).reshape(-1)


def frequencies(n: int) -> np.ndarray:
    """Integer frequencies in centered order, -n/2 .. n/2 - 1."""
    return np.arange(n) - n // 2


def bin_index(m, n: int):
    """Array position of integer frequency ``m`` in a centered spectrum."""
    return np.asarray(m) + n // 2


@dataclass(frozen=True, eq=False)
class Signal:
    """A complex signal on the cyclic grid with n = 2**L samples."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex).reshape(-1)
        log_size(s.size)
        if not np.all(np.isfinite(s)):
            raise ConfigurationError("signal samples must be finite", key="samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def L(self) -> int:
        return self.n.bit_length() - 1

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    # -- serialization -------------------------------------------------

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for j, z in enumerate(self.samples):
            w.writerow([j, repr(float(z.real)), repr(float(z.imag))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "Signal":
        """Read a signal from CSV text or a path; ``#`` lines are skipped."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text()
        rows = [ln for ln in source.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        reader = csv.DictReader(rows)
        if reader.fieldnames is None or not {"index", "re", "im"} <= set(reader.fieldnames):
            raise ConfigurationError("signal CSV needs columns index, re, im", key="columns")
        entries = sorted((int(r["index"]), complex(float(r["re"]), float(r["im"]))) for r in reader)
        idx = [e[0] for e in entries]
        if idx != list(range(len(idx))):
            raise ConfigurationError("signal CSV indices must be 0..n-1", key="index")
        return cls(np.array([e[1] for e in entries], dtype=complex))

    def to_bytes(self) -> bytes:
        body = np.empty(2 * self.n, dtype="<f8")
        body[0::2] = self.samples.real
        body[1::2] = self.samples.imag
        return BINARY_MAGIC + struct.pack("<Q", self.n) + body.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signal":
        if data[:8] != BINARY_MAGIC:
            raise ConfigurationError("bad signal header", key="header")
        (n,) = struct.unpack("<Q", data[8:16])
        body = np.frombuffer(data[16:], dtype="<f8")
        if body.size != 2 * n:
            raise ConfigurationError(f"expected {2 * n} floats, found {body.size}", key="n")
        return cls(body[0::2] + 1j * body[1::2])

    def write(self, path) -> None:
        path = Path(path)
        if path.suffix == ".csv":
            self.to_csv(path)
        else:
            path.write_bytes(self.to_bytes())

    @classmethod
    def read(cls, path) -> "Signal":
        path = Path(path)
        if path.suffix == ".csv":
            return cls.from_csv(path)
        return cls.from_bytes(path.read_bytes())


def dft(f) -> np.ndarray:
    """Forward transform with the 1/n normalization, centered frequency order."""
    x = as_samples(f)
    log_size(x.size)
    return np.fft.fftshift(np.fft.fft(x)) / x.size


def idft(F) -> np.ndarray:
    """Inverse of :func:`dft`."""
    F = np.asarray(F, dtype=complex).reshape(-1)
    log_size(F.size)
    return np.fft.ifft(np.fft.ifftshift(F)) * F.size


def lq_norm(f, q: float) -> float:
    """Riemann-sum L^q norm ``((1/n) sum |f|**q)**(1/q)``; ``q = inf`` gives the max."""
    a = np.abs(as_samples(f))
    if q == np.inf:
        return float(a.max(initial=0.0))
    if not q >= 1:
        raise ParameterError(f"q must be >= 1 or inf, got {q}", key="q")
    if a.size == 0:
        return 0.0
    top = a.max()
    if top == 0:
        return 0.0
    # scale out the max so large q does not overflow
    return float(top * np.mean((a / top) ** q) ** (1.0 / q))


def weak_l1_quasinorm(f) -> float:
    """Exact discrete weak-L^1 quasinorm ``max_t t * |{|f| >= t}| / n``."""
    a = np.sort(np.abs(as_samples(f)))[::-1]
    if a.size == 0:
        return 0.0
    # with descending order, a[i] * (i + 1) counts every sample >= a[i] at least once;
    # for tied values the last position of the tie gives the full count.
    return float(np.max(a * np.arange(1, a.size + 1)) / a.size)


def apply_multiplier(f, m) -> np.ndarray:
    """Return ``idft(m * dft(f))`` for a centered multiplier ``m``."""
    x = as_samples(f)
    m = np.asarray(m).reshape(-1)
    if m.size != x.size:
        raise ConfigurationError(f"multiplier length {m.size} != signal length {x.size}", key="m")
    return idft(m * dft(x))
