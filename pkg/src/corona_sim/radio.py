"""First-order radio energy model.

Costs are in joules; ``k`` is a packet length in bits and ``d`` a distance
in meters. Defaults follow the usual values for this model family:
50 nJ/bit electronics, 10 pJ/bit/m^2 free-space amplifier,
0.0013 pJ/bit/m^4 multipath amplifier and 5 nJ/bit/signal aggregation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

E_ELEC = 50e-9
EPS_FS = 10e-12
EPS_MP = 0.0013e-12
E_AGG = 5e-9


def _check(name: str, value: float, *, strict: bool = False) -> None:
    if not math.isfinite(value) or value < 0 or (strict and value == 0):
        raise ValueError(f"{name} must be a finite {'positive' if strict else 'non-negative'} number, got {value!r}")


@dataclass(frozen=True)
class RadioParams:
    e_elec: float = E_ELEC
    eps_fs: float = EPS_FS
    eps_mp: float = EPS_MP
    e_agg: float = E_AGG
    d_o: float | None = None

    def __post_init__(self) -> None:
        for name in ("e_elec", "eps_fs", "eps_mp", "e_agg"):
            _check(name, getattr(self, name))
        if self.d_o is None:
            # crossover that makes the two amplifier branches meet
            d_o = math.sqrt(self.eps_fs / self.eps_mp) if self.eps_mp > 0 else math.inf
            object.__setattr__(self, "d_o", d_o)
        elif not self.d_o > 0:
            raise ValueError(f"d_o must be positive, got {self.d_o!r}")


DEFAULT_RADIO = RadioParams()


def tx_energy(params: RadioParams, k: float, d: float) -> float:
    """Energy to transmit ``k`` bits over ``d`` meters."""
    _check("k", k, strict=True)
    _check("d", d)
    if d < params.d_o:
        return k * (params.e_elec + params.eps_fs * d * d)
    return k * (params.e_elec + params.eps_mp * d**4)


def rx_energy(params: RadioParams, k: float) -> float:
    _check("k", k, strict=True)
    return params.e_elec * k


def agg_energy(params: RadioParams, k: float, signals: int) -> float:
    """Energy to fuse ``signals`` incoming ``k``-bit signals into one packet."""
    _check("k", k, strict=True)
    if signals < 1:
        raise ValueError(f"signals must be >= 1, got {signals!r}")
    return params.e_agg * k * signals
