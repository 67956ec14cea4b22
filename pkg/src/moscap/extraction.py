"""Inverse problems: recover stack parameters from C-V data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .device import NM, CVCurve, DeviceStack, Kind, Polarity, Regime
from .errors import (
    ConvergenceError,
    InvalidInputError,
    MoscapError,
    NoPlateauError,
    OutOfRangeError,
    ProfileUndefinedError,
    RankDeficiencyError,
    UnsupportedOperationError,
)
from .model import capacitance, oxide_capacitance_per_area

PLATEAU_FRACTION = 0.10
PLATEAU_MAX_SPREAD = 0.05
MIN_PLATEAU_POINTS = 5


def _positive(**values):
    for name, v in values.items():
        if not (v is not None and math.isfinite(v) and v > 0):
            raise InvalidInputError(f"{name} must be positive and finite, got {v!r}")


def extract_oxide_capacitance(curve: CVCurve, polarity=Polarity.P) -> float:
    """Accumulation-plateau estimate of C_ox.

    Takes the median of the 10 % of samples deepest into accumulation:
    the most negative biases for a p-type substrate, the most positive for
    n-type. ``polarity=None`` (metal-insulator-metal) uses the whole curve.
    """
    n = len(curve)
    if n < MIN_PLATEAU_POINTS:
        raise NoPlateauError(f"need at least {MIN_PLATEAU_POINTS} points for a plateau, got {n}")
    cap = curve.capacitance[curve.settling:] if curve.settling < n else curve.capacitance
    if polarity is None:
        window = cap
    else:
        k = max(1, math.ceil(PLATEAU_FRACTION * cap.size))
        window = cap[:k] if Polarity(polarity) is Polarity.P else cap[-k:]
    level = float(np.median(window))
    spread = float(window.max() - window.min()) / level
    if spread > PLATEAU_MAX_SPREAD:
        raise NoPlateauError(
            f"accumulation samples spread {spread:.1%} (> {PLATEAU_MAX_SPREAD:.0%}); no plateau"
        )
    return level


def extract_tox(c_ox: float, area: float, relative_permittivity: float = 3.9,
                constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Oxide thickness in nm from C_ox = eps0 eps_r A / t_ox."""
    _positive(c_ox=c_ox, area=area, relative_permittivity=relative_permittivity)
    return constants.vacuum_permittivity * relative_permittivity * area / c_ox / NM


def extract_area(c_ox: float, t_ox: float, relative_permittivity: float = 3.9,
                 constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Capacitor area in cm^2; ``t_ox`` in nm."""
    _positive(c_ox=c_ox, t_ox=t_ox, relative_permittivity=relative_permittivity)
    return c_ox * t_ox * NM / (constants.vacuum_permittivity * relative_permittivity)


DOPING_SEARCH_DECADES = (13.0, 19.0)


def _w_dmax(doping, constants):
    phi2 = 2 * constants.kT_over_q * math.log(doping / constants.intrinsic_carrier_concentration)
    return math.sqrt(2 * constants.silicon_permittivity * phi2 / (constants.elementary_charge * doping))


def extract_doping_maxmin(c_ox: float, c_min: float, area: float,
                          constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Substrate doping from the high-frequency C_max/C_min pair.

    Inverts C_min = series(C_ox, eps_Si A / W_dmax(N)) by bisection on log10 N.
    """
    _positive(c_ox=c_ox, c_min=c_min, area=area)
    if not c_min < c_ox:
        raise InvalidInputError(f"C_min ({c_min:g} F) must be below C_ox ({c_ox:g} F)")
    cd_min = 1.0 / (1.0 / c_min - 1.0 / c_ox)
    target = constants.silicon_permittivity * area / cd_min

    lo, hi = DOPING_SEARCH_DECADES
    # W_dmax falls monotonically with N over the bracket
    w_lo, w_hi = _w_dmax(10**lo, constants), _w_dmax(10**hi, constants)
    if not w_hi <= target <= w_lo:
        raise OutOfRangeError(
            f"C_min/C_ox = {c_min / c_ox:.4f} implies doping outside 1e{lo:g}..1e{hi:g} cm^-3"
        )
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if _w_dmax(10**mid, constants) > target:
            lo = mid
        else:
            hi = mid
    return 10 ** (0.5 * (lo + hi))


@dataclass(frozen=True, eq=False)
class DopingProfile:
    depth: np.ndarray  # um
    concentration: np.ndarray  # cm^-3

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=float).reshape(-1)
        n = np.asarray(self.concentration, dtype=float).reshape(-1)
        if d.shape != n.shape or d.size == 0:
            raise InvalidInputError("profile needs matching, non-empty depth and concentration")
        if np.any(np.diff(d) <= 0):
            raise InvalidInputError("profile depths must be strictly increasing")
        if np.any(~(n > 0)):
            raise InvalidInputError("profile concentrations must be positive")
        object.__setattr__(self, "depth", d)
        object.__setattr__(self, "concentration", n)

    def __len__(self):
        return self.depth.size


def doping_profile_from_cv(curve: CVCurve, area: float, c_ox: Optional[float] = None,
                           constants: PhysicalConstants = DEFAULT_CONSTANTS) -> DopingProfile:
    """1/C^2 profile: N(W) = 2 / (q eps_Si A^2 |d(1/C^2)/dV|) at W = eps_Si A / C.

    Derivatives are central differences, so the end points are dropped. Pass
    ``c_ox`` to subtract the oxide from the apparent depth of a MOS structure.
    """
    _positive(area=area)
    v, c = curve.bias, curve.capacitance
    if v.size < 3:
        raise ProfileUndefinedError(f"need at least 3 points for central differences, got {v.size}")
    dc = np.diff(c)
    direction = np.sign(dc[np.argmax(np.abs(dc))])
    bad = np.flatnonzero(np.sign(dc) != direction)
    if direction == 0 or bad.size:
        i = int(bad[0]) if bad.size else 0
        raise ProfileUndefinedError(
            f"capacitance is not strictly monotone between {v[i]:g} V and {v[i + 1]:g} V",
            interval=(float(v[i]), float(v[i + 1])),
        )
    eps = constants.silicon_permittivity
    y = 1.0 / c**2
    slope = np.abs((y[2:] - y[:-2]) / (v[2:] - v[:-2]))
    conc = 2.0 / (constants.elementary_charge * eps * area**2 * slope)
    inv_c = 1.0 / c[1:-1]
    if c_ox is not None:
        _positive(c_ox=c_ox)
        inv_c = inv_c - 1.0 / c_ox
    depth = eps * area * inv_c / 1e-4
    if np.any(depth <= 0):
        raise ProfileUndefinedError("apparent depth is not positive; is C_ox too small?")
    order = np.argsort(depth)
    return DopingProfile(depth[order], conc[order])


@dataclass(frozen=True)
class ThreePointMarkers:
    """Profile read-out points in um: onset of change, minimum, and end."""

    x1_onset: float
    x2_minimum: float
    x3_end: float

    def __post_init__(self):
        if not self.x1_onset <= self.x2_minimum <= self.x3_end:
            raise InvalidInputError(
                f"markers must satisfy x1 <= x2 <= x3, got "
                f"{self.x1_onset}, {self.x2_minimum}, {self.x3_end}"
            )


def junction_depth(markers: ThreePointMarkers) -> float:
    """Junction depth x3 - x1 in um.

    The subtraction runs in decimal so graph read-outs such as 1.45 - 0.65
    come back as the nearest double to 0.8, not 0.7999999999999999.
    """
    return float(Decimal(repr(float(markers.x3_end))) - Decimal(repr(float(markers.x1_onset))))


def markers_from_profile(profile: DopingProfile, threshold: float = 0.10) -> ThreePointMarkers:
    """Locate onset/minimum/end points on a diffused-junction profile.

    Onset and end are the first and last depths where |d log10 N / dx|
    reaches ``threshold`` times its peak; the minimum is the lowest
    concentration sample.
    """
    if len(profile) < 3:
        raise InvalidInputError("need at least 3 profile samples to locate markers")
    x = profile.depth
    slope = np.abs(np.gradient(np.log10(profile.concentration), x))
    peak = slope.max()
    if peak == 0:
        raise InvalidInputError("profile is flat; no junction to locate")
    steep = np.flatnonzero(slope >= threshold * peak)
    x2 = float(x[np.argmin(profile.concentration)])
    x1 = min(float(x[steep[0]]), x2)
    x3 = max(float(x[steep[-1]]), x2)
    return ThreePointMarkers(x1, x2, x3)


# --- full-curve least squares -------------------------------------------------

FIT_PARAMETERS = ("t_ox", "doping", "flat_band", "area")
MAX_FIT_ITERATIONS = 100
RELATIVE_IMPROVEMENT_STOP = 1e-8
JACOBIAN_RELATIVE_STEP = 1e-4

# internal coordinate bounds: t_ox nm, log10 doping, V_fb V, log10 area
_BOUNDS = {
    "t_ox": (1.0, 1.0e4),
    "doping": (13.0, 20.0),
    "flat_band": (-10.0, 10.0),
    "area": (-12.0, 3.0),
}


@dataclass
class ExtractionResult:
    t_ox: float  # nm
    area: float  # cm^2
    substrate_doping: Optional[float]  # cm^-3
    flat_band: Optional[float]  # V
    residual_rms: float  # F
    iterations: int
    converged: bool
    free: tuple = ()
    stack: Optional[DeviceStack] = None
    residual_history: List[float] = field(default_factory=list)


def _flat_band_of(stack: DeviceStack) -> Optional[float]:
    if stack.kind is not Kind.MOS:
        return None
    from .model import flat_band_voltage

    return flat_band_voltage(stack)


def _pack(stack: DeviceStack, free: Sequence[str]) -> np.ndarray:
    values = {
        "t_ox": stack.oxide.thickness_nm,
        "area": math.log10(stack.oxide.area),
    }
    if stack.kind is Kind.MOS:
        values["doping"] = math.log10(stack.substrate.doping)
        values["flat_band"] = _flat_band_of(stack)
    return np.array([values[name] for name in free], dtype=float)


def _unpack(p: np.ndarray, base: DeviceStack, free: Sequence[str]) -> DeviceStack:
    v = dict(zip(free, p.tolist()))
    oxide = base.oxide
    if "t_ox" in v:
        oxide = replace(oxide, thickness=v["t_ox"] * NM)
    if "area" in v:
        oxide = replace(oxide, area=10 ** v["area"])
    stack = replace(base, oxide=oxide)
    if "doping" in v:
        stack = replace(stack, substrate=replace(stack.substrate, doping=10 ** v["doping"]))
    if "flat_band" in v:
        # hold Q_f, move the work-function term so V_fb lands on the parameter
        cox = oxide_capacitance_per_area(stack.oxide, stack.constants)
        stack = replace(stack, workfunction_difference=v["flat_band"] + stack.fixed_oxide_charge / cox)
    return stack


def _project(p: np.ndarray, free: Sequence[str]) -> np.ndarray:
    lo = np.array([_BOUNDS[n][0] for n in free])
    hi = np.array([_BOUNDS[n][1] for n in free])
    return np.clip(p, lo, hi)


def _result(stack, free, resid, iterations, converged, history):
    return ExtractionResult(
        t_ox=stack.oxide.thickness_nm,
        area=stack.oxide.area,
        substrate_doping=stack.substrate.doping if stack.substrate is not None else None,
        flat_band=_flat_band_of(stack),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        iterations=iterations,
        converged=converged,
        free=tuple(free),
        stack=stack,
        residual_history=list(history),
    )


def _check_rank(jac: np.ndarray, free: Sequence[str]):
    norms = np.linalg.norm(jac, axis=0)
    dead = [name for name, n in zip(free, norms) if not n > 0]
    if dead:
        raise RankDeficiencyError(
            f"the data carry no information on {', '.join(dead)}", parameters=dead
        )
    _, s, vt = np.linalg.svd(jac / norms, full_matrices=False)
    small = s < 1e-8 * s[0]
    if small.any():
        null = np.abs(vt[small]).max(axis=0)
        names = [name for name, w in zip(free, null) if w > 0.1]
        raise RankDeficiencyError(
            f"parameters {', '.join(names)} cannot be told apart by this data", parameters=names
        )


def fit_cv(measured: CVCurve, initial: DeviceStack, free_parameters: Iterable[str] = ("t_ox", "doping"),
           regime=Regime.HIGH_FREQUENCY, max_iterations: int = MAX_FIT_ITERATIONS) -> ExtractionResult:
    """Least-squares fit of the forward model to a measured curve.

    Levenberg-Marquardt damped Gauss-Newton with a forward-difference
    Jacobian. Doping and area are fitted as log10, thickness (nm) and
    flat-band voltage linearly; steps are projected onto the bounds.
    Samples flagged as settling are ignored.
    """
    free = tuple(dict.fromkeys(free_parameters))
    unknown = [n for n in free if n not in FIT_PARAMETERS]
    if unknown:
        raise InvalidInputError(f"unknown fit parameter(s): {', '.join(unknown)}")
    if initial.kind is Kind.MIM and {"doping", "flat_band"} & set(free):
        raise UnsupportedOperationError("doping and flat_band are undefined for a metal-insulator-metal stack")
    v = measured.bias[measured.settling:]
    c_meas = measured.capacitance[measured.settling:]
    if free and v.size < 2 * len(free):
        raise InvalidInputError(
            f"{v.size} data points cannot constrain {len(free)} parameters (need >= {2 * len(free)})"
        )

    def residual(p):
        return capacitance(_unpack(p, initial, free), v, regime) - c_meas

    p = _project(_pack(initial, free), free)
    r = residual(p)
    cost = float(r @ r)
    history = [float(np.sqrt(cost / r.size))]
    if not free:
        return _result(initial, free, r, 0, True, history)

    lam = 1e-3
    converged = False
    iterations = 0
    hi = np.array([_BOUNDS[n][1] for n in free])
    while iterations < max_iterations:
        iterations += 1
        if cost == 0.0:
            converged = True
            break
        h = JACOBIAN_RELATIVE_STEP * np.maximum(np.abs(p), 1.0)
        h = np.where(p + h > hi, -h, h)
        jac = np.empty((r.size, p.size))
        for j in range(p.size):
            q = p.copy()
            q[j] += h[j]
            jac[:, j] = (residual(q) - r) / h[j]
        _check_rank(jac, free)

        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        accepted = False
        failures = 0
        while lam <= 1e16:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = _project(p + step, free)
            try:
                r_new = residual(trial)
            except MoscapError:
                failures += 1
                lam *= 10
                continue
            new_cost = float(r_new @ r_new)
            if np.isfinite(new_cost) and new_cost < cost:
                accepted = True
                break
            lam *= 10
        if not accepted:
            if failures and failures >= 10:
                best = _result(_unpack(p, initial, free), free, r, iterations, False, history)
                raise ConvergenceError("model evaluation failed around the current estimate", best=best)
            # no descent direction left at working precision
            converged = True
            break
        improvement = (cost - new_cost) / cost
        p, r, cost = trial, r_new, new_cost
        history.append(float(np.sqrt(cost / r.size)))
        lam = max(lam / 10, 1e-12)
        if improvement < RELATIVE_IMPROVEMENT_STOP:
            converged = True
            break
    return _result(_unpack(p, initial, free), free, r, iterations, converged, history)
