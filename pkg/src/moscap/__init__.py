"""MOS capacitor C-V modelling, virtual measurement and parameter extraction."""

__version__ = "0.1.0"

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .device import CVCurve, CVPoint, DeviceStack, Kind, OxideSpec, Polarity, Regime, SubstrateSpec, SweepPlan
from .errors import (
    ConvergenceError,
    InvalidInputError,
    MoscapError,
    NoPlateauError,
    NotFoundError,
    OutOfRangeError,
    ParseError,
    ProfileUndefinedError,
    RankDeficiencyError,
    RegimeError,
    UnsupportedOperationError,
)
from .extraction import (
    DopingProfile,
    ExtractionResult,
    ThreePointMarkers,
    doping_profile_from_cv,
    extract_area,
    extract_doping_maxmin,
    extract_oxide_capacitance,
    extract_tox,
    fit_cv,
    junction_depth,
    markers_from_profile,
)
from .model import (
    body_factor,
    bulk_potential,
    c_min,
    capacitance,
    cv_curve,
    depletion_capacitance,
    depletion_width,
    flat_band_voltage,
    max_depletion_width,
    oxide_capacitance,
    series_capacitance,
    surface_potential,
    threshold_voltage,
)
from .sweep import SplitMix64, reference_curves, simulate_sweep

__all__ = [
    "CVCurve",
    "CVPoint",
    "ConvergenceError",
    "DEFAULT_CONSTANTS",
    "DeviceStack",
    "DopingProfile",
    "ExtractionResult",
    "InvalidInputError",
    "Kind",
    "MoscapError",
    "NoPlateauError",
    "NotFoundError",
    "OutOfRangeError",
    "OxideSpec",
    "ParseError",
    "PhysicalConstants",
    "Polarity",
    "ProfileUndefinedError",
    "RankDeficiencyError",
    "Regime",
    "RegimeError",
    "SplitMix64",
    "SubstrateSpec",
    "SweepPlan",
    "ThreePointMarkers",
    "UnsupportedOperationError",
    "body_factor",
    "bulk_potential",
    "c_min",
    "capacitance",
    "cv_curve",
    "depletion_capacitance",
    "depletion_width",
    "doping_profile_from_cv",
    "extract_area",
    "extract_doping_maxmin",
    "extract_oxide_capacitance",
    "extract_tox",
    "fit_cv",
    "flat_band_voltage",
    "junction_depth",
    "markers_from_profile",
    "max_depletion_width",
    "oxide_capacitance",
    "reference_curves",
    "series_capacitance",
    "simulate_sweep",
    "surface_potential",
    "threshold_voltage",
]
