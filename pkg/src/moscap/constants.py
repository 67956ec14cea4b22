"""Physical constants in the cm / F / V unit system used throughout the package."""

from dataclasses import dataclass, replace

ELEMENTARY_CHARGE = 1.602176634e-19  # C
BOLTZMANN = 1.380649e-23  # J/K
VACUUM_PERMITTIVITY = 8.85e-14  # F/cm
SIO2_RELATIVE_PERMITTIVITY = 3.9
SI_RELATIVE_PERMITTIVITY = 11.7
INTRINSIC_CONCENTRATION = 1.0e10  # cm^-3, held fixed (no n_i(T) model)


@dataclass(frozen=True)
class PhysicalConstants:
    """Material and thermal constants for one evaluation.

    ``kT_over_q`` is derived from ``temperature`` so the two can never drift
    apart; use :meth:`at` to get a copy at another temperature.
    """

    elementary_charge: float = ELEMENTARY_CHARGE
    vacuum_permittivity: float = VACUUM_PERMITTIVITY
    temperature: float = 300.0
    intrinsic_carrier_concentration: float = INTRINSIC_CONCENTRATION
    silicon_relative_permittivity: float = SI_RELATIVE_PERMITTIVITY
    oxide_relative_permittivity: float = SIO2_RELATIVE_PERMITTIVITY

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    @property
    def kT_over_q(self) -> float:
        return BOLTZMANN * self.temperature / self.elementary_charge

    boltzmann_kT_over_q = kT_over_q

    @property
    def silicon_permittivity(self) -> float:
        return self.silicon_relative_permittivity * self.vacuum_permittivity

    def at(self, temperature: float) -> "PhysicalConstants":
        return replace(self, temperature=temperature)


DEFAULT_CONSTANTS = PhysicalConstants()
