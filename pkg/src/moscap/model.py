"""Forward C-V model of an ideal MOS (or metal-oxide-metal) capacitor.

Potentials are handled internally in a polarity-normalised frame: ``u = s * psi``
with ``s = +1`` for p-type and ``-1`` for n-type substrates, so that ``u > 0``
always means depletion/inversion and ``u < 0`` accumulation.

Gate charge per unit area as a function of ``u`` (p-type form)::

    u < 0            -sqrt(2 q eps N kT/q) * sqrt(exp(-u/Vt) + u/Vt - 1)
    0 <= u <= 2phiF  sqrt(2 q eps N u)
    u > 2phiF        sqrt(2 q eps N (u + Vt*(exp(x) - x - 1))),  x = (u - 2phiF)/Vt

The inversion term has zero slope at ``2 phiF`` so the charge and its first
derivative are continuous where inversion begins. Deep depletion drops it.
"""

from __future__ import annotations

import math

import numpy as np

from .device import CVCurve, DeviceStack, Kind, OxideSpec, Regime, SweepPlan
from .errors import ConvergenceError, InvalidInputError, RegimeError, UnsupportedOperationError

MAX_BISECTION_ITERATIONS = 200
BALANCE_TOLERANCE = 1e-12  # V; contract is 1e-9, kept tighter for finite differences
BRACKET_MARGIN = 1.0  # V beyond 2 phiF for the initial bracket


def _require_mos(stack: DeviceStack, what: str):
    if stack.kind is not Kind.MOS:
        raise UnsupportedOperationError(f"{what} is undefined for a metal-insulator-metal stack")


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def oxide_capacitance(oxide: OxideSpec) -> float:
    """Parallel-plate capacitance eps0 * eps_r * A / t_ox in farads."""
    if not (oxide.thickness > 0 and oxide.area > 0):
        raise InvalidInputError("oxide thickness and area must be positive")
    return oxide_capacitance_per_area(oxide) * oxide.area


def oxide_capacitance_per_area(oxide: OxideSpec, constants=None) -> float:
    from .constants import DEFAULT_CONSTANTS

    eps0 = (constants or DEFAULT_CONSTANTS).vacuum_permittivity
    return eps0 * oxide.relative_permittivity / oxide.thickness


def series_capacitance(c1, c2):
    """Two capacitors in series. Either argument may be ``inf`` (a short)."""
    a = np.asarray(c1, dtype=float)
    b = np.asarray(c2, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise InvalidInputError("series capacitances must be positive")
    with np.errstate(divide="ignore"):
        out = 1.0 / (1.0 / a + 1.0 / b)
    return float(out) if out.ndim == 0 else out


def bulk_potential(stack: DeviceStack) -> float:
    """phi_F = (kT/q) ln(N / n_i), always returned positive."""
    _require_mos(stack, "bulk potential")
    c = stack.constants
    return c.kT_over_q * math.log(stack.substrate.doping / c.intrinsic_carrier_concentration)


def body_factor(stack: DeviceStack) -> float:
    _require_mos(stack, "body factor")
    c = stack.constants
    cox = oxide_capacitance_per_area(stack.oxide, c)
    return math.sqrt(2 * c.elementary_charge * c.silicon_permittivity * stack.substrate.doping) / cox


def flat_band_voltage(stack: DeviceStack) -> float:
    _require_mos(stack, "flat-band voltage")
    cox = oxide_capacitance_per_area(stack.oxide, stack.constants)
    return stack.workfunction_difference - stack.fixed_oxide_charge / cox


def max_depletion_width(stack: DeviceStack) -> float:
    _require_mos(stack, "maximum depletion width")
    c = stack.constants
    phi2 = 2 * bulk_potential(stack)
    return math.sqrt(2 * c.silicon_permittivity * phi2 / (c.elementary_charge * stack.substrate.doping))


def threshold_voltage(stack: DeviceStack) -> float:
    """V_T = V_fb +/- (2 phiF + gamma sqrt(2 phiF)); sign follows the substrate polarity."""
    _require_mos(stack, "threshold voltage")
    phi2 = 2 * bulk_potential(stack)
    s = stack.substrate.polarity.sign
    return flat_band_voltage(stack) + s * (phi2 + body_factor(stack) * math.sqrt(phi2))


def c_min(stack: DeviceStack) -> float:
    """Minimum high-frequency capacitance: C_ox in series with the fully depleted layer."""
    _require_mos(stack, "C_min")
    area = stack.oxide.area
    cd = stack.constants.silicon_permittivity * area / max_depletion_width(stack)
    return series_capacitance(oxide_capacitance(stack.oxide), cd)


class _Frame:
    """Per-stack numbers reused in every charge evaluation."""

    def __init__(self, stack: DeviceStack):
        c = stack.constants
        self.vt = c.kT_over_q
        self.eps = c.silicon_permittivity
        self.qn = c.elementary_charge * stack.substrate.doping
        self.phi2 = 2 * bulk_potential(stack)
        self.cox = oxide_capacitance_per_area(stack.oxide, c)
        self.sign = stack.substrate.polarity.sign
        self.vfb = flat_band_voltage(stack)

    def charge(self, u, inversion=True):
        """Normalised gate charge per unit area (C/cm^2) at normalised potential ``u``."""
        u = np.asarray(u, dtype=float)
        k = 2 * self.eps * self.qn
        with np.errstate(over="ignore", invalid="ignore"):
            y = u / self.vt
            acc = np.maximum(np.expm1(-y) + y, 0.0)
            q_acc = -np.sqrt(k * self.vt * acc)
            inside = np.maximum(u, 0.0)
            if inversion:
                x = np.maximum((u - self.phi2) / self.vt, 0.0)
                inside = inside + self.vt * np.maximum(np.expm1(x) - x, 0.0)
            q_dep = np.sqrt(k * inside)
        return np.where(u < 0, q_acc, q_dep)

    def semiconductor_capacitance(self, u, regime):
        """Small-signal semiconductor capacitance per unit area (F/cm^2).

        ``inf`` in accumulation and at flat band, where the total collapses to C_ox.
        """
        u = np.asarray(u, dtype=float)
        k = self.eps * self.qn
        out = np.full(u.shape, np.inf)
        dep = u > 0
        if regime is Regime.DEEP_DEPLETION:
            w_sq = 2 * self.eps * u[dep] / self.qn
            out[dep] = self.eps / np.sqrt(w_sq)
            return out
        depl = dep & (u <= self.phi2)
        out[depl] = self.eps / np.sqrt(2 * self.eps * u[depl] / self.qn)
        inv = u > self.phi2
        cd_min = self.eps / math.sqrt(2 * self.eps * self.phi2 / self.qn)
        if regime is Regime.LOW_FREQUENCY:
            with np.errstate(over="ignore"):
                x = (u[inv] - self.phi2) / self.vt
                out[inv] = k * np.exp(x) / self.charge(u[inv])
        else:
            out[inv] = cd_min
        return out


def _bisect(frame: _Frame, veff, inversion, bias):
    """Vectorised bisection of u + Q(u)/C_ox' = veff."""
    veff = np.asarray(veff, dtype=float)

    def f(u):
        return u + frame.charge(u, inversion) / frame.cox - veff

    half = np.full(veff.shape, frame.phi2 + BRACKET_MARGIN)
    lo, hi = -half, half.copy()
    ok = (f(lo) <= 0) & (f(hi) >= 0)
    if not ok.all():
        # |u*| <= |veff| because the charge shares the sign of u
        wide = np.maximum(half, np.abs(veff) + BRACKET_MARGIN)
        lo = np.where(ok, lo, -wide)
        hi = np.where(ok, hi, wide)
        ok = (f(lo) <= 0) & (f(hi) >= 0)
        if not ok.all():
            i = int(np.flatnonzero(~ok)[0])
            raise ConvergenceError(
                f"surface-potential bracket expansion failed at gate bias {bias[i]:g} V",
                bracket=(float(lo[i]), float(hi[i])),
            )

    u = np.full(veff.shape, np.nan)
    active = np.ones(veff.shape, dtype=bool)
    for _ in range(MAX_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        done = active & (
            (np.abs(fm) <= BALANCE_TOLERANCE) | (hi - lo <= 4 * np.spacing(np.abs(mid) + 1.0))
        )
        u[done] = mid[done]
        active &= ~done
        if not active.any():
            break
        up = fm > 0
        hi = np.where(active & up, mid, hi)
        lo = np.where(active & ~up, mid, lo)
    else:
        i = int(np.flatnonzero(active)[0])
        raise ConvergenceError(
            f"surface potential did not converge at gate bias {bias[i]:g} V",
            bracket=(float(lo[i]), float(hi[i])),
        )
    resid = np.abs(f(u))
    if np.any(resid > 1e-9):
        i = int(np.argmax(resid))
        raise ConvergenceError(
            f"surface-potential residual {resid[i]:.2e} V at gate bias {bias[i]:g} V",
            bracket=(float(u[i]), float(u[i])),
        )
    return u


def surface_potential(stack: DeviceStack, gate_bias, inversion: bool = True):
    """Surface potential psi_s (V) at one or many gate biases.

    Solves V_g = V_fb + psi_s - Q_s(psi_s)/C_ox' by bracketed bisection.
    ``inversion=False`` suppresses the minority-carrier charge, which is
    the deep-depletion (fast sweep) condition.
    """
    _require_mos(stack, "surface potential")
    frame = _Frame(stack)
    vg = np.atleast_1d(np.asarray(gate_bias, dtype=float))
    u = _bisect(frame, frame.sign * (vg - frame.vfb), inversion, vg)
    psi = frame.sign * u
    return float(psi[0]) if np.ndim(gate_bias) == 0 else psi


def gate_charge(stack: DeviceStack, gate_bias, inversion: bool = True):
    """Gate charge per unit area (C/cm^2), from the oxide voltage drop."""
    psi = surface_potential(stack, gate_bias, inversion)
    cox = oxide_capacitance_per_area(stack.oxide, stack.constants)
    return cox * (np.asarray(gate_bias, dtype=float) - flat_band_voltage(stack) - psi)


def depletion_width(stack: DeviceStack, surface_potential, clamp: bool = True):
    """Depletion-approximation width sqrt(2 eps |psi| / qN) in cm, clamped at W_dmax.

    Raises :class:`RegimeError` for an accumulated surface.
    """
    _require_mos(stack, "depletion width")
    psi = np.asarray(surface_potential, dtype=float)
    u = stack.substrate.polarity.sign * psi
    if np.any(u < 0):
        raise RegimeError("surface is accumulated; no depletion width exists")
    c = stack.constants
    w = np.sqrt(2 * c.silicon_permittivity * u / (c.elementary_charge * stack.substrate.doping))
    if clamp:
        w = np.minimum(w, max_depletion_width(stack))
    return _scalar_or_array(w, psi)


def depletion_capacitance(stack: DeviceStack, surface_potential, clamp: bool = True):
    """eps_Si * A / W in farads. At psi = 0 the width vanishes and this returns ``inf``."""
    w = np.asarray(depletion_width(stack, surface_potential, clamp), dtype=float)
    eps_a = stack.constants.silicon_permittivity * stack.oxide.area
    with np.errstate(divide="ignore"):
        cd = eps_a / w
    return _scalar_or_array(cd, w)


def capacitance(stack: DeviceStack, gate_bias, regime=Regime.HIGH_FREQUENCY):
    """Small-signal capacitance (F) at the given gate biases."""
    regime = Regime(regime)
    if regime is Regime.RAW:
        raise InvalidInputError("raw-measurement is not a model regime")
    vg = np.atleast_1d(np.asarray(gate_bias, dtype=float))
    cox_total = oxide_capacitance(stack.oxide)
    if stack.kind is Kind.MIM:
        out = np.full(vg.shape, cox_total)
    else:
        frame = _Frame(stack)
        u = _bisect(frame, frame.sign * (vg - frame.vfb), regime is not Regime.DEEP_DEPLETION, vg)
        cs = frame.semiconductor_capacitance(u, regime)
        out = np.atleast_1d(stack.oxide.area * series_capacitance(np.full(u.shape, frame.cox), cs))
        # pin the plateaus to the closed forms so the envelope holds bit-exactly
        out[np.isinf(cs)] = cox_total
        if regime is Regime.HIGH_FREQUENCY:
            out[u > frame.phi2] = c_min(stack)
    return float(out[0]) if np.ndim(gate_bias) == 0 else out


def cv_curve(stack: DeviceStack, sweep: SweepPlan) -> CVCurve:
    """Noiseless model curve over the sweep grid in the sweep's regime."""
    if sweep.regime is Regime.RAW:
        raise InvalidInputError("cv_curve needs a model regime, not raw-measurement")
    v = sweep.biases()
    return CVCurve(v, capacitance(stack, v, sweep.regime), sweep.regime)


def surface_state(stack: DeviceStack, gate_bias):
    """Label each bias 'accumulation', 'depletion' or 'inversion' (equilibrium)."""
    if stack.kind is Kind.MIM:
        return np.full(np.shape(np.atleast_1d(gate_bias)), "oxide", dtype=object)
    u = stack.substrate.polarity.sign * np.atleast_1d(surface_potential(stack, gate_bias))
    phi2 = 2 * bulk_potential(stack)
    return np.where(u < 0, "accumulation", np.where(u <= phi2, "depletion", "inversion")).astype(object)
