"""Calderon-Zygmund decomposition with vanishing moments at several frequencies.

``f = g + sum_I b_I`` where the I are maximal spatial dyadic intervals on
which the average of |f| exceeds ``N**-0.5 * lam`` (N = number of
frequencies), ``b_I = f_I - P_I f_I`` with ``f_I = 1_I f`` and ``P_I`` the
L^2(3I) orthogonal projection onto the exponentials ``exp(2 pi i xi x)``,
xi in ``freqs``, restricted to 3I.  Each b_I therefore has vanishing
modulated means at every frequency, and ``g`` is f off the union plus the
projections.  3I wraps around the circle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import IntegrityError, ParameterError
from .signal import as_samples, log_size

PIVOT_TOLERANCE = 1e-10
RECONSTRUCTION_TOLERANCE = 1e-9


@dataclass
class CZPiece:
    lo: int  # first sample of I
    length: int  # |I| in samples
    support: np.ndarray  # sample indices of 3I
    b: np.ndarray  # full-length bad piece
    dropped: list = field(default_factory=list)  # frequencies removed by pivoting

    @property
    def interval(self) -> np.ndarray:
        return np.arange(self.lo, self.lo + self.length)


@dataclass
class CZDecomposition:
    f: np.ndarray
    g: np.ndarray
    pieces: list
    lam: float
    freqs: list
    degenerate: bool = False
    constants: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.freqs)

    @property
    def n(self) -> int:
        return self.f.size

    def to_json(self, b_csv_ref: str = "pieces.csv") -> str:
        return json.dumps(
            {
                "lambda": self.lam,
                "freqs": [int(x) for x in self.freqs],
                "degenerate": self.degenerate,
                "pieces": [
                    {"lo": p.lo, "len": p.length, "b_csv_ref": f"{b_csv_ref}#{i}"}
                    for i, p in enumerate(self.pieces)
                ],
                "constants": self.constants,
            },
            indent=1,
        )

    def pieces_csv(self) -> str:
        lines = ["piece,index,re,im"]
        for i, p in enumerate(self.pieces):
            for x in p.support:
                z = p.b[x]
                lines.append(f"{i},{x},{float(z.real)!r},{float(z.imag)!r}")
        return "\n".join(lines) + "\n"


def triple(lo: int, length: int, n: int) -> np.ndarray:
    """Sample indices of 3I (same center, thrice the length), cyclic and deduplicated."""
    if 3 * length >= n:
        return np.arange(n)
    return (np.arange(lo - length, lo + 2 * length)) % n


def stopping_intervals(f, threshold: float) -> list[tuple[int, int]]:
    """Maximal dyadic intervals (lo, length) whose mean of |f| exceeds ``threshold``."""
    a = np.abs(as_samples(f))
    n = a.size
    L = log_size(n)
    covered = np.zeros(n, dtype=bool)
    out = []
    for k in range(0, L + 1):
        length = n >> k
        means = a.reshape(2**k, length).mean(axis=1)
        free = ~covered.reshape(2**k, length).any(axis=1)
        for m in np.flatnonzero((means > threshold) & free):
            out.append((int(m * length), length))
            covered[m * length : (m + 1) * length] = True
    return out


def _project(h: np.ndarray, support: np.ndarray, freqs, n: int):
    """L^2(support) projection of h onto the exponentials; returns (projection, dropped)."""
    E = np.exp(2j * np.pi * np.outer(support, freqs) / n)
    Q, R, piv = scipy.linalg.qr(E, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > PIVOT_TOLERANCE * diag[0])) if diag.size else 0
    Qr = Q[:, :rank]
    proj = Qr @ (Qr.conj().T @ h)
    dropped = [int(freqs[i]) for i in piv[rank:]]
    return proj, dropped


def multifreq_czd(f, lam: float, freqs) -> CZDecomposition:
    """Decompose f at height ``lam`` with vanishing moments at ``freqs`` (integer bins)."""
    x = np.array(as_samples(f))
    n = x.size
    log_size(n)
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}", key="lambda")
    freqs = sorted(set(int(v) for v in freqs))
    if not freqs:
        raise ParameterError("need at least one frequency", key="freqs")
    N = len(freqs)
    intervals = stopping_intervals(x, lam / np.sqrt(N))
    g = x.copy()
    for lo, length in intervals:
        g[lo : lo + length] = 0.0
    pieces = []
    for lo, length in intervals:
        support = triple(lo, length, n)
        fI = np.zeros(support.size, dtype=complex)
        inside = (support - lo) % n < length
        fI[inside] = x[support[inside]]
        proj, dropped = _project(fI, support, freqs, n)
        b = np.zeros(n, dtype=complex)
        b[support] = fI - proj
        g[support] += proj
        pieces.append(CZPiece(lo, length, support, b, dropped))
    d = CZDecomposition(x, g, pieces, float(lam), freqs, degenerate=(intervals == [(0, n)]))
    d.constants = czd_constants(d)
    return d


def czd_constants(d: CZDecomposition) -> dict:
    """Measured constants of the inequality suite, computed from raw fields."""
    f, n, N, lam = d.f, d.n, d.N, d.lam
    f1 = np.abs(f).mean()
    total_len = sum(p.length for p in d.pieces) / n
    recon = d.g + sum((p.b for p in d.pieces), np.zeros(n, dtype=complex))
    out = {
        "C1": 0.0,
        "C2": 0.0,
        "C3": 0.0,
        "C4": 0.0,
        "modulation_residual": 0.0,
        "reconstruction_residual": float(np.abs(recon - f).max()),
    }
    if f1 > 0:
        out["C1"] = float(total_len * lam / (np.sqrt(N) * f1))
        out["C2"] = float(np.mean(np.abs(d.g) ** 2) / (np.sqrt(N) * lam * f1))
    freqs = np.asarray(d.freqs)
    for p in d.pieces:
        I = p.length / n
        fI = np.zeros(n, dtype=complex)
        fI[p.lo : p.lo + p.length] = f[p.lo : p.lo + p.length]
        out["C3"] = max(out["C3"], float(np.abs(fI).mean() / (lam * I / np.sqrt(N))))
        out["C4"] = max(out["C4"], float(np.sqrt(np.mean(np.abs(p.b - fI) ** 2)) / (lam * np.sqrt(I))))
        # b vanishes off 3I, so the modulated means only need its support
        E = np.exp(-2j * np.pi * np.outer(freqs, p.support) / n)
        moments = np.abs(E @ p.b[p.support]) / n
        out["modulation_residual"] = max(out["modulation_residual"], float(moments.max()))
    return out


def verify_czd(d: CZDecomposition) -> dict:
    """Recheck every structural invariant from raw fields and return the constants.

    Raises IntegrityError when reconstruction fails, a piece leaves 3I, or
    two stopping intervals overlap.
    """
    n = d.n
    seen = np.zeros(n, dtype=bool)
    for p in d.pieces:
        span = np.arange(p.lo, p.lo + p.length)
        if np.any(seen[span]):
            raise IntegrityError(f"stopping interval at {p.lo} overlaps another")
        seen[span] = True
        outside = np.ones(n, dtype=bool)
        outside[triple(p.lo, p.length, n)] = False
        if np.any(p.b[outside] != 0):
            raise IntegrityError(f"piece at {p.lo} is nonzero outside 3I")
    c = czd_constants(d)
    scale = np.abs(d.f).max()
    if c["reconstruction_residual"] > RECONSTRUCTION_TOLERANCE * max(scale, np.finfo(float).tiny):
        raise IntegrityError(f"reconstruction residual {c['reconstruction_residual']:.3e}")
    return c
