"""Virtual C-V parameter analyser and the published thickness series.

Noise comes from SplitMix64, written out here so the stream is reproducible
bit-for-bit in any language::

    state = (state + 0x9E3779B97F4A7C15) mod 2**64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    z =   z ^ (z >> 31)

A uniform double is ``(z >> 11) * 2**-53`` in [0, 1). Each Gaussian sample
draws two uniforms u1, u2 and returns
``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`` (Box-Muller, cosine branch only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .device import PF, CVCurve, DeviceStack, Regime, SweepPlan
from .errors import InvalidInputError, NotFoundError
from .model import cv_curve, oxide_capacitance

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def gauss(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def normal(self, n: int, sigma: float = 1.0) -> np.ndarray:
        return np.array([sigma * self.gauss() for _ in range(n)])


def simulate_sweep(stack: DeviceStack, plan: SweepPlan) -> CVCurve:
    """Run one virtual bias sweep: model curve plus seeded Gaussian noise.

    The first ``plan.settle_discard`` samples are flagged as settling in the
    returned curve; they are still present.
    """
    if plan.noise_sigma < 0:
        raise InvalidInputError("noise_sigma must be >= 0")
    model = cv_curve(stack, plan)
    cap = model.capacitance
    if plan.noise_sigma > 0:
        cap = cap + SplitMix64(plan.seed).normal(cap.size, plan.noise_sigma)
        if np.any(cap <= 0):
            raise InvalidInputError("noise drove a capacitance sample non-positive; lower noise_sigma")
    return CVCurve(model.bias, cap, Regime.RAW, settling=min(plan.settle_discard, cap.size))


@dataclass(frozen=True)
class ReferenceSeries:
    name: str
    description: str
    headline_pf: float  # value used to calibrate the area at 500 nm
    table: Tuple[Tuple[float, float], ...]  # (t_ox nm, C pF) as published
    stack: DeviceStack

    def model_pf(self, t_ox_nm: float) -> float:
        from dataclasses import replace

        oxide = replace(self.stack.oxide, thickness=t_ox_nm * 1e-7)
        return oxide_capacitance(oxide) / PF


CALIBRATION_THICKNESS_NM = 500.0
SURFACE_DOPING = 1e19  # cm^-3, diffused p+/n+ surface concentration

_PUBLISHED = {
    "al_p_plus": (
        "Al / SiO2 / p+ Si MOS diode",
        28.62,
        ((150.0, 140.0), (300.0, 47.0), (500.0, 28.2)),
        "p",
    ),
    "al_n_plus": (
        "Al / SiO2 / n+ Si MOS diode",
        29.55,
        ((150.0, 140.0), (300.0, 47.0), (500.0, 28.2)),
        "n",
    ),
    "metal1_metal2": (
        "Al metal-1 / SiO2 / Al metal-2",
        16.0,
        ((150.0, 82.0), (300.0, 27.0), (500.0, 16.0)),
        None,
    ),
}

REFERENCE_NAMES = tuple(_PUBLISHED)


def _calibrated_area(c_pf: float, t_nm: float) -> float:
    from .extraction import extract_area

    return extract_area(c_pf * PF, t_nm)


def reference_curves(named: str, plan: SweepPlan = None) -> Tuple[DeviceStack, CVCurve, ReferenceSeries]:
    """Calibrated stack, its model C-V curve, and the published thickness table.

    The area is fixed by the 500 nm headline capacitance. Heavily doped
    substrates are modelled at the 1e19 cm^-3 surface doping, where the
    depletion modulation is below one percent.
    """
    try:
        description, headline, table, polarity = _PUBLISHED[named]
    except KeyError:
        raise NotFoundError(
            f"unknown reference series {named!r}; choose from {', '.join(REFERENCE_NAMES)}"
        ) from None
    area = _calibrated_area(headline, CALIBRATION_THICKNESS_NM)
    if polarity is None:
        stack = DeviceStack.mim(CALIBRATION_THICKNESS_NM, area)
    else:
        stack = DeviceStack.mos(CALIBRATION_THICKNESS_NM, area, polarity, SURFACE_DOPING)
    series = ReferenceSeries(named, description, headline, table, stack)
    curve = cv_curve(stack, plan or SweepPlan(-5.0, 5.0, 0.1))
    return stack, curve, series


@dataclass(frozen=True)
class ComparisonRow:
    series: str
    t_ox_nm: float
    published_pf: float
    model_pf: float

    @property
    def deviation(self) -> float:
        """Relative deviation of the published value from the model prediction."""
        return (self.published_pf - self.model_pf) / self.model_pf


def comparison_table(names=REFERENCE_NAMES) -> List[ComparisonRow]:
    rows = []
    for name in names:
        _, _, series = reference_curves(name)
        for t_nm, c_pf in series.table:
            rows.append(ComparisonRow(name, t_nm, c_pf, series.model_pf(t_nm)))
    return rows


def thickness_series_curves(named: str, plan: SweepPlan = None) -> Dict[float, CVCurve]:
    """Model C-V curves of a reference stack at each tabulated thickness."""
    from dataclasses import replace

    stack, _, series = reference_curves(named)
    plan = plan or SweepPlan(-5.0, 5.0, 0.1)
    out = {}
    for t_nm, _ in series.table:
        s = replace(stack, oxide=replace(stack.oxide, thickness=t_nm * 1e-7))
        out[t_nm] = cv_curve(s, plan)
    return out
