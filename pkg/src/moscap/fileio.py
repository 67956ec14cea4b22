"""Text formats: C-V CSV, doping-profile CSV, stack config and fit results."""

from __future__ import annotations

import math
import os
import re
import tempfile
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .constants import INTRINSIC_CONCENTRATION
from .device import (
    DEFAULT_WORKFUNCTION_DIFFERENCE,
    CVCurve,
    DeviceStack,
    Kind,
    OxideSpec,
    Polarity,
    Regime,
    SubstrateSpec,
)
from .errors import InvalidInputError, OutOfRangeError, ParseError
from .extraction import DopingProfile, ExtractionResult

CV_HEADER = "voltage_V,capacitance_F"
PROFILE_HEADER = "depth_um,concentration_per_cm3"

# unit suffix -> (dimension, factor to canonical unit)
UNITS: Dict[str, Tuple[str, float]] = {
    "nm": ("length", 1e-7),
    "um": ("length", 1e-4),
    "cm": ("length", 1.0),
    "cm2": ("area", 1.0),
    "mm2": ("area", 1e-2),
    "um2": ("area", 1e-8),
    "F": ("capacitance", 1.0),
    "nF": ("capacitance", 1e-9),
    "pF": ("capacitance", 1e-12),
    "fF": ("capacitance", 1e-15),
    "V": ("voltage", 1.0),
    "mV": ("voltage", 1e-3),
    "per_cm3": ("concentration", 1.0),
    "K": ("temperature", 1.0),
    "C_per_cm2": ("charge_density", 1.0),
}

_QUANTITY = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-z_][A-Za-z0-9_]*)?\s*$"
)


def fmt(x: float) -> str:
    """Canonical number form: scientific notation, 9 significant digits."""
    return f"{x:.8e}"


def parse_quantity(text: str, dimension: str = None) -> float:
    """Parse ``'500 nm'``-style input to canonical units.

    A bare number is taken as already canonical. With ``dimension`` set, a
    suffix of another dimension is rejected.
    """
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"not a number with optional unit: {text.strip()!r}")
    value = float(m.group(1))
    unit = m.group(2)
    if unit is None:
        return value
    if unit not in UNITS:
        raise ValueError(f"unknown unit suffix {unit!r}")
    dim, factor = UNITS[unit]
    if dimension is not None and dim != dimension:
        raise ValueError(f"unit {unit!r} is a {dim}, expected a {dimension}")
    return value * factor


def write_text_atomic(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- C-V CSV -------------------------------------------------------------------


def _data_lines(text: str, header: str):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    if not lines or lines[0].strip() != header:
        got = lines[0] if lines else ""
        raise ParseError(f"expected header {header!r}, got {got!r}", line=1)
    return lines[1:]


def _two_floats(line: str, lineno: int):
    cells = line.split(",")
    if len(cells) != 2:
        raise ParseError(f"expected 2 columns, found {len(cells)}", line=lineno)
    out = []
    for col, cell in enumerate(cells, start=1):
        try:
            x = float(cell)
        except ValueError:
            raise ParseError(f"not a number: {cell.strip()!r}", line=lineno, column=col) from None
        if not math.isfinite(x):
            raise ParseError(f"non-finite value {cell.strip()!r}", line=lineno, column=col)
        out.append(x)
    return out


def parse_cv_csv(text: str, regime=Regime.RAW) -> CVCurve:
    rows = _data_lines(text, CV_HEADER)
    if not rows:
        raise ParseError("no data rows", line=2)
    bias, cap = [], []
    for i, line in enumerate(rows, start=2):
        v, c = _two_floats(line, i)
        if bias and v == bias[-1]:
            raise ParseError(f"duplicate bias {v:g} V", line=i, column=1)
        if bias and v < bias[-1]:
            raise ParseError(f"bias {v:g} V is below the previous row; rows must be sorted", line=i, column=1)
        if not c > 0:
            raise ParseError(f"capacitance must be > 0, got {c:g}", line=i, column=2)
        bias.append(v)
        cap.append(c)
    return CVCurve(np.array(bias), np.array(cap), regime)


def write_cv_csv(curve: CVCurve) -> str:
    out = [CV_HEADER]
    out.extend(f"{fmt(v)},{fmt(c)}" for v, c in curve)
    return "\n".join(out) + "\n"


def parse_profile_csv(text: str) -> DopingProfile:
    rows = _data_lines(text, PROFILE_HEADER)
    if not rows:
        raise ParseError("no data rows", line=2)
    pairs = [_two_floats(line, i) for i, line in enumerate(rows, start=2)]
    d, n = zip(*pairs)
    try:
        return DopingProfile(np.array(d), np.array(n))
    except InvalidInputError as exc:
        raise ParseError(str(exc)) from None


def write_profile_csv(profile: DopingProfile) -> str:
    out = [PROFILE_HEADER]
    out.extend(f"{fmt(d)},{fmt(n)}" for d, n in zip(profile.depth, profile.concentration))
    return "\n".join(out) + "\n"


# --- stack config ----------------------------------------------------------------

_KEYS = {
    # key: (dimension or None, allowed kinds)
    "kind": (None, ("mos", "mim")),
    "t_ox": ("length", ("mos", "mim")),
    "area": ("area", ("mos", "mim")),
    "epsilon_r": (None, ("mos", "mim")),
    "polarity": (None, ("mos",)),
    "doping": ("concentration", ("mos",)),
    "temperature": ("temperature", ("mos", "mim")),
    "phi_ms": ("voltage", ("mos",)),
    "q_f": ("charge_density", ("mos",)),
}
_REQUIRED = {"mos": ("kind", "t_ox", "area", "polarity", "doping"), "mim": ("kind", "t_ox", "area")}
_DEFAULTS = {
    "mos": {"epsilon_r": 3.9, "temperature": 300.0, "phi_ms": DEFAULT_WORKFUNCTION_DIFFERENCE, "q_f": 0.0},
    "mim": {"epsilon_r": 3.9, "temperature": 300.0},
}
_KIND_ALIASES = {"mos": "mos", "mim": "mim", "metal-insulator-metal": "mim"}


def _read_pairs(text: str):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", line=lineno)
        if key in pairs:
            raise ParseError(f"duplicate key {key!r} (first on line {pairs[key][1]})", line=lineno)
        if not value:
            raise ParseError(f"missing value for {key!r}", line=lineno)
        pairs[key] = (value, lineno)
    return pairs


def parse_stack_config_verbose(text: str) -> Tuple[DeviceStack, Dict[str, float]]:
    """Like :func:`parse_stack_config`, also returning the defaults that were filled in."""
    pairs = _read_pairs(text)
    if "kind" not in pairs:
        raise ParseError("missing required key 'kind'")
    kind_text, kind_line = pairs["kind"]
    kind = _KIND_ALIASES.get(kind_text.lower())
    if kind is None:
        raise ParseError(f"kind must be 'mos' or 'mim', got {kind_text!r}", line=kind_line)
    for key, (_, lineno) in pairs.items():
        if kind not in _KEYS[key][1]:
            raise ParseError(f"key {key!r} does not apply to kind {kind!r}", line=lineno)
    missing = [k for k in _REQUIRED[kind] if k not in pairs]
    if missing:
        raise ParseError(f"missing required key(s): {', '.join(missing)}")

    values = {}
    for key, (text_value, lineno) in pairs.items():
        dim = _KEYS[key][0]
        if key in ("kind", "polarity"):
            continue
        try:
            values[key] = parse_quantity(text_value, dim)
        except ValueError as exc:
            raise ParseError(f"{key}: {exc}", line=lineno) from None

    def check(key, ok, rule):
        if key in values and not ok(values[key]):
            raise OutOfRangeError(f"line {pairs[key][1]}: {key} = {pairs[key][0]} out of range ({rule})")

    check("t_ox", lambda x: x > 0, "must be > 0")
    check("area", lambda x: x > 0, "must be > 0")
    check("epsilon_r", lambda x: x >= 1, "must be >= 1")
    check("temperature", lambda x: x > 0, "must be > 0 K")
    check("doping", lambda x: x > INTRINSIC_CONCENTRATION, f"must exceed n_i = {INTRINSIC_CONCENTRATION:g} per_cm3")

    defaults = {k: v for k, v in _DEFAULTS[kind].items() if k not in values}
    values.update(defaults)
    oxide = OxideSpec(values["t_ox"], values["area"], values["epsilon_r"])
    if kind == "mim":
        stack = DeviceStack(oxide, None, 0.0, 0.0, Kind.MIM, values["temperature"])
    else:
        pol_text, pol_line = pairs["polarity"]
        pol = pol_text.lower().removesuffix("-type")
        if pol not in ("n", "p"):
            raise ParseError(f"polarity must be 'n' or 'p', got {pol_text!r}", line=pol_line)
        stack = DeviceStack(
            oxide,
            SubstrateSpec(Polarity(pol), values["doping"]),
            values["phi_ms"],
            values["q_f"],
            Kind.MOS,
            values["temperature"],
        )
    return stack, defaults


def parse_stack_config(text: str) -> DeviceStack:
    return parse_stack_config_verbose(text)[0]


def format_stack_config(stack: DeviceStack) -> str:
    lines = [f"kind = {'mos' if stack.kind is Kind.MOS else 'mim'}",
             f"t_ox = {fmt(stack.oxide.thickness_nm)} nm",
             f"area = {fmt(stack.oxide.area)} cm2",
             f"epsilon_r = {stack.oxide.relative_permittivity!r}",
             f"temperature = {stack.temperature!r} K"]
    if stack.kind is Kind.MOS:
        lines += [f"polarity = {stack.substrate.polarity.value}",
                  f"doping = {fmt(stack.substrate.doping)} per_cm3",
                  f"phi_ms = {stack.workfunction_difference!r} V",
                  f"q_f = {stack.fixed_oxide_charge!r} C_per_cm2"]
    return "\n".join(lines) + "\n"


# --- fit results -----------------------------------------------------------------


def format_extraction_result(result: ExtractionResult) -> str:
    lines = [f"t_ox = {fmt(result.t_ox)} nm", f"area = {fmt(result.area)} cm2"]
    if result.substrate_doping is not None:
        lines.append(f"doping = {fmt(result.substrate_doping)} per_cm3")
    if result.flat_band is not None:
        lines.append(f"flat_band = {fmt(result.flat_band)} V")
    lines += [
        f"residual_rms = {fmt(result.residual_rms)} F",
        f"iterations = {result.iterations}",
        f"converged = {'true' if result.converged else 'false'}",
        f"free = {','.join(result.free)}",
    ]
    return "\n".join(lines) + "\n"


def parse_extraction_result(text: str) -> ExtractionResult:
    dims = {"t_ox": "length", "area": "area", "doping": "concentration",
            "flat_band": "voltage", "residual_rms": "capacitance"}
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        try:
            if key in dims:
                fields[key] = parse_quantity(value, dims[key])
            elif key == "iterations":
                fields[key] = int(value)
            elif key == "converged":
                if value not in ("true", "false"):
                    raise ValueError(f"expected true/false, got {value!r}")
                fields[key] = value == "true"
            elif key == "free":
                fields[key] = tuple(s for s in value.split(",") if s)
            else:
                raise ParseError(f"unknown key {key!r}", line=lineno)
        except ValueError as exc:
            raise ParseError(f"{key}: {exc}", line=lineno) from None
    for key in ("t_ox", "area", "residual_rms", "iterations", "converged"):
        if key not in fields:
            raise ParseError(f"missing required key {key!r}")
    return ExtractionResult(
        t_ox=fields["t_ox"] / 1e-7,
        area=fields["area"],
        substrate_doping=fields.get("doping"),
        flat_band=fields.get("flat_band"),
        residual_rms=fields["residual_rms"],
        iterations=fields["iterations"],
        converged=fields["converged"],
        free=fields.get("free", ()),
    )
