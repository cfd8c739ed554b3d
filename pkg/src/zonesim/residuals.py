"""Spectral analysis of simulation residuals.

Residual statistics, Welch power spectra, squared coherency between a
residual and its excitations, and a per-band split of residual variance
among excitations that are de-correlated one after the other.

Frequencies are in cycles per hour and spectral densities are one-sided,
in (unit)^2.h, so that integrating a density over ``[0, Nyquist]`` gives
the variance of the series. Integration uses trapezoidal bin weights: the
DC and Nyquist bins count for half a bin width.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.signal import detrend as _linear_detrend
from scipy.signal import get_window

SEGMENT_DAYS = 8.0
COLLINEAR_TOLERANCE = 1e-10
ZERO_POWER_TOLERANCE = 1e-12
MIN_COHERENCY_SEGMENTS = 4


@dataclass(frozen=True)
class ResidualStats:
    mean: float
    std: float
    count: int


def residual_stats(measured, simulated) -> ResidualStats:
    """Mean and sample standard deviation of ``measured - simulated``."""
    m = np.asarray(measured, dtype=float)
    s = np.asarray(simulated, dtype=float)
    if m.shape != s.shape:
        raise ValueError(f"length mismatch: {m.shape} vs {s.shape}")
    if m.ndim != 1 or m.size < 2:
        raise ValueError("need two equal 1-D series of length >= 2")
    r = m - s
    return ResidualStats(float(r.mean()), float(r.std(ddof=1)), r.size)


# -- band bookkeeping -------------------------------------------------------

@dataclass(frozen=True)
class BandPartition:
    """Frequency bands ``[lo, hi)`` in h^-1, ascending and non-overlapping.

    A band whose upper edge reaches the Nyquist frequency also takes the
    Nyquist bin.
    """

    bands: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bands = tuple((float(lo), float(hi)) for lo, hi in self.bands)
        object.__setattr__(self, "bands", bands)
        if not bands:
            raise ValueError("need at least one band")
        prev = 0.0
        for lo, hi in bands:
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo < prev or hi <= lo:
                raise ValueError(f"bands must be ascending and non-overlapping, got {bands}")
            prev = hi

    @classmethod
    def from_edges(cls, edges: Sequence[float]) -> BandPartition:
        """Contiguous bands between consecutive ``edges``."""
        edges = [float(e) for e in edges]
        if len(edges) < 2:
            raise ValueError("need at least two band edges")
        return cls(tuple(zip(edges[:-1], edges[1:])))

    @classmethod
    def parse(cls, text: str) -> BandPartition:
        """Comma-separated edges, e.g. ``"0,0.02,0.08,0.32,0.5"``."""
        try:
            return cls.from_edges([float(t) for t in text.split(",") if t.strip()])
        except ValueError as exc:
            raise ValueError(f"bad band list {text!r}: {exc}") from None

    def __len__(self):
        return len(self.bands)

    def __iter__(self):
        return iter(self.bands)

    def labels(self) -> list[str]:
        return [f"{lo:g}-{hi:g}" for lo, hi in self.bands]

    def check(self, nyquist: float) -> None:
        if self.bands[-1][1] > nyquist * (1 + 1e-12):
            raise ValueError(f"band edge {self.bands[-1][1]} above Nyquist frequency {nyquist}")

    def covers(self, nyquist: float) -> bool:
        """True when the bands tile ``[0, nyquist]`` without gaps."""
        edges_meet = all(a[1] == b[0] for a, b in zip(self.bands, self.bands[1:]))
        return edges_meet and self.bands[0][0] == 0.0 and np.isclose(self.bands[-1][1], nyquist)


DEFAULT_BANDS = BandPartition.from_edges([0.0, 0.02, 0.08, 0.32, 0.5])


def bin_weights(frequencies) -> np.ndarray:
    """Trapezoidal integration weights of equally spaced bins from 0 to Nyquist."""
    f = np.asarray(frequencies, dtype=float)
    if f.size < 2:
        return np.ones_like(f)
    w = np.full(f.size, f[1] - f[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def band_masks(frequencies, bands: BandPartition) -> np.ndarray:
    """Boolean (bands x bins) membership.

    Each band edge is moved to the nearest bin edge (bin ``k`` spans
    ``f_k -/+ df/2`` clipped to ``[0, Nyquist]``), so a bin always lies
    wholly inside one band or outside all of them.
    """
    f = np.asarray(frequencies, dtype=float)
    df = f[1] - f[0]
    nyquist = f[-1]
    bands.check(nyquist)
    edges = np.r_[0.0, f[:-1] + df / 2, nyquist]

    def snap(x):
        return edges[np.argmin(np.abs(edges - x))]

    masks = np.zeros((len(bands), f.size), dtype=bool)
    for i, (lo, hi) in enumerate(bands):
        lo_s, hi_s = snap(lo), snap(hi)
        masks[i] = (f >= lo_s) & (f < hi_s)
        if hi_s >= nyquist:
            masks[i, -1] = True
    return masks


def band_integrals(frequencies, density, bands: BandPartition) -> np.ndarray:
    """Integral of ``density`` over each band (last axis = frequency)."""
    d = np.asarray(density, dtype=float)
    w = bin_weights(frequencies)
    return np.stack([np.sum(d[..., m] * w[m], axis=-1) for m in band_masks(frequencies, bands)])


# -- Welch estimation --------------------------------------------------------

@dataclass(frozen=True)
class SpectralConfig:
    """Welch estimator settings.

    ``segment_length`` is in samples; ``None`` means eight days of data.
    ``detrend`` is ``"constant"`` (per-segment mean) or ``"linear"``.
    """

    segment_length: int | None = None
    overlap_fraction: float = 0.5
    window: str = "hann"
    detrend: str = "constant"
    step: float = 1.0  # h

    def __post_init__(self):
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must be in [0, 1)")
        if self.detrend not in ("constant", "linear"):
            raise ValueError("detrend must be 'constant' or 'linear'")
        if not self.step > 0:
            raise ValueError("step must be > 0")

    def samples_per_segment(self) -> int:
        if self.segment_length is not None:
            return int(self.segment_length)
        return int(round(SEGMENT_DAYS * 24.0 / self.step))


@dataclass(frozen=True)
class _Segments:
    """Windowed segment FFTs of one or more equally long series."""

    fft: np.ndarray  # (series, segments, bins)
    frequencies: np.ndarray
    scale: float  # turns sum over segments of conj(a) b into a one-sided density

    @property
    def segment_count(self) -> int:
        return self.fft.shape[1]

    def cross(self, i: int, j: int) -> np.ndarray:
        return self.scale * np.sum(np.conj(self.fft[i]) * self.fft[j], axis=0)

    def matrix(self) -> np.ndarray:
        """Spectral matrix, shape (bins, series, series), Hermitian per bin."""
        return self.scale * np.einsum("isf,jsf->fij", np.conj(self.fft), self.fft)


def _segments(series: Sequence[np.ndarray], cfg: SpectralConfig) -> _Segments:
    x = np.vstack([np.asarray(s, dtype=float) for s in series])
    n = x.shape[1]
    nperseg = cfg.samples_per_segment()
    if nperseg < 8:
        raise ValueError(f"segment length {nperseg} < 8 samples")
    if n < nperseg:
        raise ValueError(f"series of {n} samples is shorter than one segment ({nperseg})")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contain non-finite values")
    hop = max(1, nperseg - int(round(cfg.overlap_fraction * nperseg)))
    starts = np.arange(0, n - nperseg + 1, hop)
    segs = x[:, starts[:, None] + np.arange(nperseg)]
    # re-reference before averaging so that a constant shift of the input
    # yields bitwise identical segments whenever the shift itself was exact
    segs = segs - segs[..., :1]
    if cfg.detrend == "linear":
        segs = _linear_detrend(segs, axis=-1, type="linear")
    else:
        segs = segs - segs.mean(axis=-1, keepdims=True)
    win = get_window(cfg.window, nperseg)
    fs = 1.0 / cfg.step
    scale = 1.0 / (fs * np.sum(win ** 2) * starts.size)
    fft = np.fft.rfft(segs * win, axis=-1)
    # one-sided: fold negative frequencies onto positive ones
    fold = np.full(fft.shape[-1], np.sqrt(2.0))
    fold[0] = 1.0
    if nperseg % 2 == 0:
        fold[-1] = 1.0
    return _Segments(fft * fold, np.fft.rfftfreq(nperseg, d=cfg.step), scale)


@dataclass(frozen=True)
class SpectralEstimate:
    frequencies: np.ndarray  # h^-1
    power: np.ndarray  # unit^2.h
    segment_count: int

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def variance(self) -> float:
        """Integrated power; matches the series variance up to window bias."""
        return float(np.sum(self.power * bin_weights(self.frequencies)))

    def peak_frequency(self) -> float:
        return float(self.frequencies[np.argmax(self.power)])


def _config(cfg: SpectralConfig | None, **overrides) -> SpectralConfig:
    cfg = cfg or SpectralConfig()
    given = {k: v for k, v in overrides.items() if v is not None}
    return SpectralConfig(**{**cfg.__dict__, **given}) if given else cfg


def psd(series, segment_length: int | None = None, overlap_fraction: float | None = None,
        window: str | None = None, *, step: float | None = None,
        detrend: str | None = None, cfg: SpectralConfig | None = None) -> SpectralEstimate:
    """Welch estimate of the one-sided power spectral density.

    Explicit arguments override the matching fields of ``cfg``.

    Examples
    --------
    >>> t = np.arange(24 * 32)
    >>> est = psd(np.sin(2 * np.pi * t / 24))
    >>> round(est.peak_frequency(), 4)
    0.0417
    """
    cfg = _config(cfg, segment_length=segment_length, overlap_fraction=overlap_fraction,
                  window=window, step=step, detrend=detrend)
    seg = _segments([series], cfg)
    power = seg.cross(0, 0).real
    return SpectralEstimate(seg.frequencies, power, seg.segment_count)


@dataclass(frozen=True)
class CoherencySpectrum:
    """Squared coherency per frequency.

    ``undefined`` marks bins where either signal has no power; ``gamma_squared``
    is 0 there.
    """

    frequencies: np.ndarray
    gamma_squared: np.ndarray
    undefined: np.ndarray
    segment_count: int


def _coherency_from(seg: _Segments, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    a, b = seg.fft[i], seg.fft[j]
    sxx = np.sum(np.abs(a) ** 2, axis=0)
    syy = np.sum(np.abs(b) ** 2, axis=0)
    sxy = np.abs(np.sum(np.conj(a) * b, axis=0)) ** 2
    # Lagrange identity: sxx*syy - |sxy|^2 = 1/2 sum_ij |a_i b_j - a_j b_i|^2 >= 0,
    # so writing gamma^2 = |sxy|^2 / (|sxy|^2 + gap) keeps it in [0, 1] by construction
    pairs = a[:, None, :] * b[None, :, :] - a[None, :, :] * b[:, None, :]
    gap = 0.5 * np.sum(np.abs(pairs) ** 2, axis=(0, 1))
    undefined = (sxx <= ZERO_POWER_TOLERANCE * sxx.max(initial=0.0)) | \
                (syy <= ZERO_POWER_TOLERANCE * syy.max(initial=0.0))
    denom = sxy + gap
    g2 = np.zeros_like(sxx)
    ok = ~undefined & (denom > 0)
    g2[ok] = sxy[ok] / denom[ok]
    return g2, undefined | (denom <= 0)


def coherency(x, y, segment_length: int | None = None, overlap_fraction: float | None = None,
              window: str | None = None, *, step: float | None = None,
              detrend: str | None = None, cfg: SpectralConfig | None = None) -> CoherencySpectrum:
    """Squared coherency ``|Sxy|^2 / (Sxx Syy)`` from segment-averaged spectra.

    Raises
    ------
    ValueError
        If the series differ in length or give fewer than four segments
        (with one segment the estimate is identically 1).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    cfg = _config(cfg, segment_length=segment_length, overlap_fraction=overlap_fraction,
                  window=window, step=step, detrend=detrend)
    seg = _segments([x, y], cfg)
    if seg.segment_count < MIN_COHERENCY_SEGMENTS:
        raise ValueError(f"coherency needs >= {MIN_COHERENCY_SEGMENTS} segments, got {seg.segment_count}")
    g2, undefined = _coherency_from(seg, 0, 1)
    return CoherencySpectrum(seg.frequencies, g2, undefined, seg.segment_count)


# -- attribution to excitations -------------------------------------------

def _named(excitations) -> list[tuple[str, np.ndarray]]:
    items = excitations.items() if isinstance(excitations, Mapping) else excitations
    out = [(str(name), np.asarray(values, dtype=float)) for name, values in items]
    if not out:
        raise ValueError("need at least one excitation")
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate excitation names in {names}")
    return out


def explained_power(residual, excitations, cfg: SpectralConfig | None = None) -> dict[str, float]:
    """Coherency-weighted residual power ``sum gamma^2 S_rr df`` per excitation."""
    cfg = cfg or SpectralConfig()
    named = _named(excitations)
    seg = _segments([residual] + [v for _, v in named], cfg)
    if seg.segment_count < MIN_COHERENCY_SEGMENTS:
        raise ValueError(f"need >= {MIN_COHERENCY_SEGMENTS} segments, got {seg.segment_count}")
    w = bin_weights(seg.frequencies)
    s_rr = seg.cross(0, 0).real
    out = {}
    for k, (name, _) in enumerate(named, start=1):
        g2, _ = _coherency_from(seg, 0, k)
        out[name] = float(np.sum(g2 * s_rr * w))
    return out


def rank_excitations(residual, excitations, cfg: SpectralConfig | None = None) -> list[str]:
    """Excitation names, most explanatory first.

    The score is the residual power weighted by the squared coherency with
    each excitation, integrated over all frequencies; ties go to the
    alphabetically first name.
    """
    score = explained_power(residual, excitations, cfg)
    return sorted(score, key=lambda name: (-score[name], name))


@dataclass(frozen=True)
class BandDecomposition:
    """Residual variance per band split among ordered excitations.

    ``contributions[b, k]`` is the variance in band ``b`` explained by the
    part of excitation ``k`` that is uncorrelated with excitations
    ``0..k-1``. Per-frequency densities are kept for plotting.
    """

    bands: BandPartition
    excitations: tuple[str, ...]
    contributions: np.ndarray  # (bands, excitations)
    unexplained: np.ndarray  # (bands,)
    total: np.ndarray  # (bands,)
    frequencies: np.ndarray = field(repr=False)
    residual_density: np.ndarray = field(repr=False)
    contribution_density: np.ndarray = field(repr=False)  # (excitations, bins)
    collinear: np.ndarray = field(repr=False)  # (excitations, bins) bool

    def contribution(self, band: int, excitation: str) -> float:
        return float(self.contributions[band, self.excitations.index(excitation)])

    def fractions(self) -> np.ndarray:
        """Contributions as a share of each band's total (0 where the band is empty)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = self.contributions / self.total[:, None]
        return np.where(self.total[:, None] > 0, frac, 0.0)

    def rows(self) -> list[tuple[float, float, str, float, float, float]]:
        out = []
        for b, (lo, hi) in enumerate(self.bands):
            for k, name in enumerate(self.excitations):
                out.append((lo, hi, name, float(self.contributions[b, k]),
                            float(self.unexplained[b]), float(self.total[b])))
        return out


def _partial_contributions(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sequential explained power from a spectral matrix.

    ``s`` has shape (bins, k + 1, k + 1) with the residual last. For each
    excitation in turn the residual power it explains is
    ``|S_rk|^2 / S_kk`` computed on spectra from which all earlier
    excitations have been regressed out (a Schur complement step).
    """
    s = s.copy()
    n_bins, size, _ = s.shape
    k_exc = size - 1
    original = np.real(np.diagonal(s, axis1=1, axis2=2)).copy()
    contrib = np.zeros((k_exc, n_bins))
    collinear = np.zeros((k_exc, n_bins), dtype=bool)
    for k in range(k_exc):
        pivot = s[:, k, k].real
        ok = pivot > COLLINEAR_TOLERANCE * original[:, k]
        collinear[k] = ~ok
        col = np.zeros((n_bins, size), dtype=complex)
        col[ok] = s[ok, :, k] / np.sqrt(pivot[ok])[:, None]
        contrib[k] = np.abs(col[:, -1]) ** 2
        s -= col[:, :, None] * np.conj(col[:, None, :])
        s[:, k, :] = 0.0
        s[:, :, k] = 0.0
    return contrib, collinear


def decompose_variance(residual, excitations, bands: BandPartition = DEFAULT_BANDS,
                       cfg: SpectralConfig | None = None) -> BandDecomposition:
    """Split the residual variance of each band among ordered excitations.

    Excitations are taken in the given order (see :func:`rank_excitations`).
    At bins where an excitation is collinear with the earlier ones it gets
    no share and the bin is flagged in ``collinear``. ``unexplained`` is
    what is left of each band's total.
    """
    cfg = cfg or SpectralConfig()
    named = _named(excitations)
    r = np.asarray(residual, dtype=float)
    for name, v in named:
        if v.shape != r.shape:
            raise ValueError(f"excitation {name!r} has {v.shape} samples, residual {r.shape}")
    seg = _segments([v for _, v in named] + [r], cfg)
    if seg.segment_count < MIN_COHERENCY_SEGMENTS:
        raise ValueError(f"need >= {MIN_COHERENCY_SEGMENTS} segments, got {seg.segment_count}")
    s = seg.matrix()
    s_rr = s[:, -1, -1].real
    contrib, collinear = _partial_contributions(s)
    totals = band_integrals(seg.frequencies, s_rr, bands)
    per_band = band_integrals(seg.frequencies, contrib, bands)  # (bands, excitations)
    unexplained = totals - per_band.sum(axis=1)
    return BandDecomposition(bands, tuple(n for n, _ in named), per_band, unexplained, totals,
                             seg.frequencies, s_rr, contrib, collinear)


def band_power_fraction(est: SpectralEstimate, bands: BandPartition = DEFAULT_BANDS) -> np.ndarray:
    """Share of the integrated power falling in each band."""
    total = est.variance()
    if total <= 0:
        return np.zeros(len(bands))
    return band_integrals(est.frequencies, est.power, bands) / total


# -- report files --------------------------------------------------------

def _write_comments(fh, comments: Iterable[str]):
    for line in comments:
        fh.write(f"# {line}\n")


def write_stats_csv(path: str | os.PathLike, stats: Mapping[tuple[str, str], ResidualStats],
                    comments: Iterable[str] = ()) -> None:
    """Rows ``mean`` and ``std``; one column per (zone, backend)."""
    keys = list(stats)
    with open(path, "w", newline="") as fh:
        _write_comments(fh, comments)
        out = csv.writer(fh)
        out.writerow(["statistic"] + [f"{zone}:{backend}" for zone, backend in keys])
        out.writerow(["mean"] + [f"{stats[k].mean:.6g}" for k in keys])
        out.writerow(["std"] + [f"{stats[k].std:.6g}" for k in keys])


def write_spectrum_csv(path: str | os.PathLike, frequencies, columns: Mapping[str, np.ndarray],
                       comments: Iterable[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        _write_comments(fh, comments)
        out = csv.writer(fh)
        out.writerow(["frequency_per_h"] + list(columns))
        for i, f in enumerate(frequencies):
            out.writerow([f"{f:.8g}"] + [f"{np.asarray(v)[i]:.8g}" for v in columns.values()])


def write_decomposition_csv(path: str | os.PathLike, decomposition: BandDecomposition,
                            comments: Iterable[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        _write_comments(fh, comments)
        out = csv.writer(fh)
        out.writerow(["band_lo_per_h", "band_hi_per_h", "excitation", "contribution",
                      "unexplained", "total"])
        for lo, hi, name, c, u, t in decomposition.rows():
            out.writerow([f"{lo:g}", f"{hi:g}", name, f"{c:.8g}", f"{u:.8g}", f"{t:.8g}"])


def write_gnuplot(path: str | os.PathLike, frequencies, columns: Mapping[str, np.ndarray],
                  comments: Iterable[str] = ()) -> None:
    """Whitespace-separated columns with a ``#`` header, for ``plot 'f' using 1:2``."""
    data = np.column_stack([np.asarray(frequencies)] + [np.asarray(v) for v in columns.values()])
    header = "\n".join(list(comments) + ["frequency_per_h " + " ".join(columns)])
    np.savetxt(path, data, fmt="%.8g", header=header)
