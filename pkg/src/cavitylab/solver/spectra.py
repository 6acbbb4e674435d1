"""Windowed Fourier analysis of recorded signals and Rabi-splitting extraction."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError


@dataclass(frozen=True)
class Peak:
    frequency: float
    weight: float
    width: float


@dataclass(frozen=True)
class SpectrumPeaks:
    peaks: tuple
    resolution: float
    frequencies: np.ndarray = field(repr=False)
    intensity: np.ndarray = field(repr=False)

    @property
    def split(self):
        return len(self.peaks) >= 2

    @property
    def rabi_splitting(self):
        """Distance between the two strongest peaks, ``None`` if not split."""
        if not self.split:
            return None
        a, b = sorted(self.peaks, key=lambda p: -p.weight)[:2]
        return abs(a.frequency - b.frequency)

    def to_dict(self):
        return {
            "resolution": self.resolution,
            "split": self.split,
            "rabi_splitting": self.rabi_splitting,
            "peaks": [{"frequency": p.frequency, "weight": p.weight, "width": p.width} for p in self.peaks],
        }


def _window(kind, n):
    if kind in ("hann", "hanning"):
        return np.hanning(n)
    if kind in ("none", "rect", "boxcar"):
        return np.ones(n)
    if kind == "blackman":
        return np.blackman(n)
    raise InvalidArgumentError(f"unknown window {kind!r}")


def absorption_spectrum(traj, observable, window="hann", pad_factor=16, floor=0.05, resolution=None):
    """Peaks of the windowed spectrum of ``traj.observables[observable]``.

    Frequencies are angular (a.u.).  Local maxima above ``floor`` times the
    strongest peak and above the resolution ``2 pi / t_end`` are kept;
    positions are refined by parabolic interpolation.  ``weight`` is the peak
    height relative to the strongest one, ``width`` its full width at half
    maximum.
    """
    if observable not in traj.observables:
        raise InvalidArgumentError(f"trajectory has no observable {observable!r}")
    signal = np.asarray(traj.observables[observable], dtype=float)
    n = len(signal)
    dt = traj.dt
    d_omega = 2.0 * np.pi / (dt * (n - 1))
    if resolution is not None and resolution < d_omega:
        raise InvalidArgumentError(
            f"requested resolution {resolution:g} is finer than 2pi/t_end = {d_omega:g}"
        )
    x = (signal - signal.mean()) * _window(window, n)
    n_fft = int(2 ** np.ceil(np.log2(n * pad_factor)))
    amp = np.abs(np.fft.rfft(x, n_fft))
    omega = 2.0 * np.pi * np.fft.rfftfreq(n_fft, dt)
    peaks = []
    if amp.max() > 0:
        interior = np.nonzero((amp[1:-1] > amp[:-2]) & (amp[1:-1] >= amp[2:]))[0] + 1
        top = amp[interior].max() if len(interior) else 0.0
        for i in interior:
            if amp[i] < floor * top or omega[i] < d_omega:
                continue
            y0, y1, y2 = amp[i - 1], amp[i], amp[i + 1]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            f = omega[i] + shift * (omega[1] - omega[0])
            height = y1 - 0.25 * (y0 - y2) * shift
            half = 0.5 * height
            lo = i
            while lo > 0 and amp[lo] > half:
                lo -= 1
            hi = i
            while hi < len(amp) - 1 and amp[hi] > half:
                hi += 1
            width = omega[hi] - omega[lo]
            peaks.append((f, height, width))
    if peaks:
        top = max(p[1] for p in peaks)
        peaks = [Peak(float(f), float(h / top), float(w)) for f, h, w in peaks]
    return SpectrumPeaks(tuple(peaks), d_omega, omega, amp)
