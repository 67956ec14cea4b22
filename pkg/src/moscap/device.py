"""Data model: device stacks, C-V curves and sweep plans.

Internal units are cm, cm^2, F, V and cm^-3. Constructors named ``from_*``
take the human units (nm, pF) used in lab notebooks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .constants import (
    DEFAULT_CONSTANTS,
    SIO2_RELATIVE_PERMITTIVITY,
    PhysicalConstants,
)
from .errors import InvalidInputError

NM = 1e-7  # cm per nm
UM = 1e-4  # cm per um
PF = 1e-12  # F per pF

DEFAULT_WORKFUNCTION_DIFFERENCE = -0.9  # V, Al gate on p-Si near 1e16 cm^-3


class Polarity(str, enum.Enum):
    N = "n"
    P = "p"

    @property
    def sign(self) -> int:
        # +1 when accumulation sits at negative gate bias
        return 1 if self is Polarity.P else -1


class Kind(str, enum.Enum):
    MOS = "mos"
    MIM = "metal-insulator-metal"


class Regime(str, enum.Enum):
    LOW_FREQUENCY = "low-frequency"
    HIGH_FREQUENCY = "high-frequency"
    DEEP_DEPLETION = "deep-depletion"
    RAW = "raw-measurement"


@dataclass(frozen=True)
class OxideSpec:
    thickness: float  # cm
    area: float  # cm^2
    relative_permittivity: float = SIO2_RELATIVE_PERMITTIVITY

    def __post_init__(self):
        if not (math.isfinite(self.thickness) and self.thickness > 0):
            raise InvalidInputError(f"oxide thickness must be > 0, got {self.thickness!r}")
        if not (math.isfinite(self.area) and self.area > 0):
            raise InvalidInputError(f"capacitor area must be > 0, got {self.area!r}")
        if not self.relative_permittivity >= 1:
            raise InvalidInputError(
                f"relative permittivity must be >= 1, got {self.relative_permittivity!r}"
            )

    @classmethod
    def from_nm(cls, thickness_nm, area, relative_permittivity=SIO2_RELATIVE_PERMITTIVITY):
        return cls(thickness_nm * NM, area, relative_permittivity)

    @property
    def thickness_nm(self) -> float:
        return self.thickness / NM


@dataclass(frozen=True)
class SubstrateSpec:
    polarity: Polarity
    doping: float  # cm^-3

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        if not (math.isfinite(self.doping) and self.doping > 0):
            raise InvalidInputError(f"doping must be > 0, got {self.doping!r}")


@dataclass(frozen=True)
class DeviceStack:
    oxide: OxideSpec
    substrate: Optional[SubstrateSpec] = None
    workfunction_difference: float = DEFAULT_WORKFUNCTION_DIFFERENCE  # V
    fixed_oxide_charge: float = 0.0  # C/cm^2
    kind: Kind = Kind.MOS
    temperature: float = 300.0  # K

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.MIM and self.substrate is not None:
            raise InvalidInputError("metal-insulator-metal stack cannot carry a substrate")
        if self.kind is Kind.MOS:
            if self.substrate is None:
                raise InvalidInputError("MOS stack requires a substrate")
            ni = self.constants.intrinsic_carrier_concentration
            if not self.substrate.doping > ni:
                raise InvalidInputError(
                    f"doping {self.substrate.doping:g} cm^-3 must exceed n_i = {ni:g} cm^-3"
                )
        if not (self.temperature > 0):
            raise InvalidInputError(f"temperature must be > 0 K, got {self.temperature!r}")

    @classmethod
    def mos(cls, t_ox_nm, area, polarity, doping, **kwargs):
        eps_r = kwargs.pop("relative_permittivity", SIO2_RELATIVE_PERMITTIVITY)
        return cls(
            oxide=OxideSpec.from_nm(t_ox_nm, area, eps_r),
            substrate=SubstrateSpec(Polarity(polarity), doping),
            **kwargs,
        )

    @classmethod
    def mim(cls, t_ox_nm, area, relative_permittivity=SIO2_RELATIVE_PERMITTIVITY):
        return cls(
            oxide=OxideSpec.from_nm(t_ox_nm, area, relative_permittivity),
            kind=Kind.MIM,
            workfunction_difference=0.0,
        )

    @property
    def constants(self) -> PhysicalConstants:
        if self.temperature == DEFAULT_CONSTANTS.temperature:
            return DEFAULT_CONSTANTS
        return DEFAULT_CONSTANTS.at(self.temperature)


class CVPoint(NamedTuple):
    bias: float
    capacitance: float


@dataclass(frozen=True, eq=False)
class CVCurve:
    """Ordered (bias, capacitance) samples.

    ``settling`` counts leading samples an instrument run marked as not yet
    settled; they are kept in the data but callers may drop them.
    """

    bias: np.ndarray
    capacitance: np.ndarray
    regime: Regime = Regime.RAW
    settling: int = 0

    def __post_init__(self):
        bias = np.array(self.bias, dtype=float).reshape(-1)
        cap = np.array(self.capacitance, dtype=float).reshape(-1)
        if bias.shape != cap.shape:
            raise InvalidInputError("bias and capacitance arrays differ in length")
        if bias.size == 0:
            raise InvalidInputError("a C-V curve needs at least one point")
        if not np.all(np.isfinite(bias)) or not np.all(np.isfinite(cap)):
            raise InvalidInputError("C-V curve contains non-finite values")
        bad = np.flatnonzero(cap <= 0)
        if bad.size:
            raise InvalidInputError(f"capacitance must be > 0 (point {bad[0]})")
        bad = np.flatnonzero(np.diff(bias) <= 0)
        if bad.size:
            raise InvalidInputError(
                f"bias must be strictly increasing (points {bad[0]} and {bad[0] + 1})"
            )
        bias.flags.writeable = False
        cap.flags.writeable = False
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "capacitance", cap)
        object.__setattr__(self, "regime", Regime(self.regime))

    def __len__(self):
        return self.bias.size

    def __iter__(self):
        for v, c in zip(self.bias.tolist(), self.capacitance.tolist()):
            yield CVPoint(v, c)

    @property
    def points(self):
        return list(self)

    def __eq__(self, other):
        if not isinstance(other, CVCurve):
            return NotImplemented
        return (
            self.regime == other.regime
            and np.array_equal(self.bias, other.bias)
            and np.array_equal(self.capacitance, other.capacitance)
        )

    __hash__ = None


@dataclass(frozen=True)
class SweepPlan:
    start: float = -5.0
    stop: float = 5.0
    step: float = 0.1
    regime: Regime = Regime.HIGH_FREQUENCY
    noise_sigma: float = 0.0  # F
    seed: int = 0
    settle_discard: int = 0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InvalidInputError(f"sweep step must be > 0, got {self.step!r}")
        if not self.start < self.stop:
            raise InvalidInputError(f"sweep start {self.start} must be below stop {self.stop}")
        if not self.noise_sigma >= 0:
            raise InvalidInputError(f"noise sigma must be >= 0, got {self.noise_sigma!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")
        if self.settle_discard < 0:
            raise InvalidInputError("settle_discard must be >= 0")

    @property
    def count(self) -> int:
        # tolerance absorbs binary representation error, e.g. 10 / 0.1
        return int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1

    def biases(self) -> np.ndarray:
        return np.round(self.start + self.step * np.arange(self.count), 12)
