"""Noise figure of a receiving system built around an active antenna.

The chain is ambient noise -> active antenna (gain ``g_antenna``) -> receiver.
All functions here work with linear noise factors and power gains; decibels
only appear through :func:`db` and :func:`linear`.

Noise powers are referred to the receiver output. Ambient and antenna noise
both pass through the antenna gain and the receiver gain, receiver noise only
through the receiver gain, so with ``T = 290 (F - 1)``::

    N_ambient  = k T_ambient  B G_a G_r
    N_antenna  = k T_antenna  B G_a G_r
    N_receiver = k T_receiver B G_r

and the power form of the system factor reduces exactly to the factor form.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

BOLTZMANN = 1.380649e-23
ROOM_TEMPERATURE_K = 290.0
# the design target for a system dominated by ambient noise
SYSTEM_NF_LIMIT = 2.0


class InfeasibleError(ValueError):
    """No antenna noise factor >= 1 can meet the system target."""

    def __init__(self, bound):
        self.bound = bound
        super().__init__("antenna noise factor would have to be %.6g (< 1); no realizable "
                         "antenna meets F_S <= %g" % (bound, SYSTEM_NF_LIMIT))


def db(value):
    if value <= 0:
        raise ValueError("dB conversion needs a positive linear value, got %r" % (value,))
    return 10.0 * math.log10(value)


def linear(value_db):
    return 10.0 ** (value_db / 10.0)


def noise_temperature(factor):
    """Equivalent noise temperature (K) of a noise factor measured at 290 K."""
    return ROOM_TEMPERATURE_K * (factor - 1.0)


@dataclass(frozen=True)
class NoiseFigureParams:
    f_ambient: float
    f_antenna: float
    f_receiver: float
    g_antenna: float

    def __post_init__(self):
        if not self.f_ambient > 1:
            raise ValueError("ambient noise factor must exceed 1, got %r" % (self.f_ambient,))
        if self.f_antenna < 1 or self.f_receiver < 1:
            raise ValueError("antenna and receiver noise factors must be >= 1")
        if not self.g_antenna > 0:
            raise ValueError("antenna gain must be positive, got %r" % (self.g_antenna,))


@dataclass(frozen=True)
class NoisePowers:
    """Noise powers in watts at the receiver output."""

    n_ambient: float
    n_antenna: float
    n_receiver: float

    def __post_init__(self):
        if min(self.n_ambient, self.n_antenna, self.n_receiver) < 0 or self.n_ambient <= 0:
            raise ValueError("noise powers must be non-negative and ambient noise positive")

    @property
    def total(self):
        return self.n_ambient + self.n_antenna + self.n_receiver

    @classmethod
    def from_params(cls, params, bandwidth_hz, g_receiver=1.0):
        if bandwidth_hz <= 0 or g_receiver <= 0:
            raise ValueError("bandwidth and receiver gain must be positive")
        kb = BOLTZMANN * bandwidth_hz
        g_total = params.g_antenna * g_receiver
        return cls(
            n_ambient=kb * noise_temperature(params.f_ambient) * g_total,
            n_antenna=kb * noise_temperature(params.f_antenna) * g_total,
            n_receiver=kb * noise_temperature(params.f_receiver) * g_receiver,
        )


def output_snr(signal_power, powers):
    if signal_power <= 0:
        raise ValueError("signal power must be positive")
    return signal_power / powers.total


def output_snr_normalized(signal_power, powers):
    """The same SNR written against the ambient-only SNR."""
    if signal_power <= 0:
        raise ValueError("signal power must be positive")
    a = powers.n_ambient
    return (signal_power / a) / (1.0 + powers.n_antenna / a + powers.n_receiver / a)


def system_nf_from_powers(powers):
    a = powers.n_ambient
    return 1.0 + powers.n_antenna / a + powers.n_receiver / a


def system_nf(params):
    fa1 = params.f_ambient - 1.0
    return (1.0 + (params.f_antenna - 1.0) / fa1
            + (params.f_receiver - 1.0) / (fa1 * params.g_antenna))


def approx_system_nf(f_ambient, f_antenna):
    """System factor with the receiver term dropped (receiver noise negligible)."""
    if not f_ambient > 1:
        raise ValueError("ambient noise factor must exceed 1")
    return 1.0 + (f_antenna - 1.0) / (f_ambient - 1.0)


def antenna_nf_bound(f_ambient, f_receiver, g_antenna):
    """Largest antenna noise factor keeping the system factor at or below 2 (may be < 1)."""
    if not g_antenna > 0:
        raise ValueError("antenna gain must be positive")
    return f_ambient - (f_receiver - 1.0) / g_antenna


def max_antenna_nf(f_ambient, f_receiver, g_antenna):
    bound = antenna_nf_bound(f_ambient, f_receiver, g_antenna)
    if bound < 1:
        raise InfeasibleError(bound)
    return bound


class AmbientTable:
    """Ambient noise factor against frequency, linearly interpolated in dB.

    Loaded from a CSV with a header and the columns ``freq_mhz`` and
    ``f_ambient_db``. Frequencies outside the table are an error rather than
    a silent clamp.
    """

    def __init__(self, freq_mhz, f_ambient_db):
        f = np.asarray(freq_mhz, dtype=float)
        v = np.asarray(f_ambient_db, dtype=float)
        if f.ndim != 1 or f.shape != v.shape or len(f) < 2:
            raise ValueError("ambient table needs at least two (freq, dB) rows")
        order = np.argsort(f)
        f, v = f[order], v[order]
        if np.any(np.diff(f) <= 0):
            raise ValueError("ambient table frequencies must be distinct")
        self.freq_mhz = f
        self.f_ambient_db = v

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            fields = [c.strip() for c in (reader.fieldnames or [])]
            if "freq_mhz" not in fields or "f_ambient_db" not in fields:
                raise ValueError("%s: header must name freq_mhz and f_ambient_db" % path)
            freqs, vals = [], []
            for lineno, row in enumerate(reader, start=2):
                row = {k.strip(): v for k, v in row.items() if k is not None}
                try:
                    freqs.append(float(row["freq_mhz"]))
                    vals.append(float(row["f_ambient_db"]))
                except (TypeError, ValueError):
                    raise ValueError("%s:%d: expected two numbers" % (path, lineno)) from None
        return cls(freqs, vals)

    def f_ambient(self, freq_mhz):
        """Linear ambient noise factor at ``freq_mhz`` (scalar or array)."""
        x = np.asarray(freq_mhz, dtype=float)
        if np.any(x < self.freq_mhz[0]) or np.any(x > self.freq_mhz[-1]):
            raise ValueError("frequency outside table range [%g, %g] MHz"
                             % (self.freq_mhz[0], self.freq_mhz[-1]))
        out = 10.0 ** (np.interp(x, self.freq_mhz, self.f_ambient_db) / 10.0)
        return float(out) if out.ndim == 0 else out
