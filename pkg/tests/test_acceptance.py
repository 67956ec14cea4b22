"""Acceptance gate.

Each test records one ``[PASS]``/``[FAIL]`` line, printed in the terminal
summary under "acceptance criteria". Run alone with
``pytest tests/test_acceptance.py -v``.
"""

import csv
import io
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import moscap.cli as cli
from moscap import (
    DeviceStack,
    SweepPlan,
    c_min,
    capacitance,
    cv_curve,
    extract_area,
    extract_oxide_capacitance,
    fit_cv,
    flat_band_voltage,
    oxide_capacitance,
    threshold_voltage,
)
from moscap.device import OxideSpec, Regime
from moscap.model import bulk_potential, gate_charge, surface_potential

from .conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

PF = 1e-12
DATA = Path(__file__).resolve().parent.parent / "data"


def record(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def family(n, seed):
    rng = np.random.default_rng(seed)
    return [
        DeviceStack.mos(float(t), 1e-3, pol, float(10**logn))
        for t, logn, pol in zip(rng.uniform(100, 800, n), rng.uniform(14, 18, n),
                                rng.choice(["p", "n"], n))
    ]


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, _ = capsys.readouterr()
    assert code == 0
    return out


def test_ac1_al_p_plus_thickness_series():
    area = extract_area(28.62 * PF, 500)
    oxide = OxideSpec.from_nm(300, area)
    start = time.perf_counter()
    for _ in range(1000):
        c = oxide_capacitance(oxide)
    per_call = (time.perf_counter() - start) / 1000
    dev = abs(47 - c / PF) / (c / PF)
    record("AC1", dev <= 0.03 and per_call < 1e-3,
           f"Al/p+ 300 nm: model {c / PF:.2f} pF vs 47 pF, deviation {dev:.2%} (tol 3%), "
           f"{per_call * 1e6:.1f} us/call (limit 1 ms)")


def test_ac2_metal1_metal2_series():
    area = extract_area(16 * PF, 500)
    c = oxide_capacitance(OxideSpec.from_nm(300, area))
    dev = abs(27 - c / PF) / (c / PF)
    record("AC2", dev <= 0.03, f"metal1-metal2 300 nm: model {c / PF:.2f} pF vs 27 pF, deviation {dev:.2%} (tol 3%)")


def test_ac3_reference_report_flags_150nm(capsys):
    rows = list(csv.DictReader(io.StringIO(run_cli(capsys, "reference"))))
    checked = []
    ok = True
    for row in rows:
        if row["series"] not in ("al_p_plus", "metal1_metal2"):
            continue
        dev = abs(float(row["deviation_pct"]))
        thin = float(row["t_ox_nm"]) == 150
        ok &= dev > 30 if thin else dev <= 3
        checked.append(f"{row['series']}@{float(row['t_ox_nm']):g}nm {row['deviation_pct']}%")
    ok &= len(checked) == 6
    record("AC3", ok, "reference deviations (>30% at 150 nm, <=3% otherwise): " + ", ".join(checked))


def test_ac4_junction_depth(capsys):
    out = run_cli(capsys, "extract", "junction", "0.65", "1.25", "1.45")
    record("AC4", out == "0.8 um\n", f"extract junction 0.65 1.25 1.45 -> {out.strip()!r} (expect exactly 0.8 um)")


def test_ac5_high_frequency_envelope():
    stacks = family(50, seed=5)
    plan = SweepPlan(-5.0, 5.0, 0.01)
    worst_plateau = 0.0
    violations = 0
    for s in stacks:
        curve = cv_curve(s, plan)
        assert len(curve) == 1001
        cox, cmin = oxide_capacitance(s.oxide), c_min(s)
        violations += int(np.sum((curve.capacitance > cox) | (curve.capacitance < cmin)))
        plateau = extract_oxide_capacitance(curve, s.substrate.polarity)
        worst_plateau = max(worst_plateau, abs(plateau - cox) / cox)
    record("AC5", violations == 0 and worst_plateau <= 5e-3,
           f"{len(stacks)} stacks x 1001 points: {violations} envelope violations, "
           f"worst plateau error {worst_plateau:.2e} (tol 5e-3)")


def test_ac6_finite_difference_oracle():
    s = DeviceStack.mos(100, 1e-3, "p", 1e16)
    vfb, vt = flat_band_voltage(s), threshold_voltage(s)
    # strictly inside depletion, clear of the regime boundaries
    span = vt - vfb
    v = np.linspace(vfb + 0.02 * span, vt - 0.02 * span, 201)
    dv = 1e-4
    start = time.perf_counter()
    semi = capacitance(s, v, Regime.HIGH_FREQUENCY)
    q = lambda x: gate_charge(s, x)
    fd = s.oxide.area * (q(v + dv) - q(v - dv)) / (2 * dv)
    elapsed = time.perf_counter() - start
    psi = surface_potential(s, v)
    assert np.all((psi > 0) & (psi < 2 * bulk_potential(s)))
    worst = float(np.max(np.abs(semi - fd) / semi))
    record("AC6", worst <= 1e-3 and elapsed < 1.0,
           f"201-point depletion grid: worst relative gap {worst:.2e} (tol 1e-3), {elapsed * 1e3:.0f} ms (limit 1 s)")


def test_ac7_fit_round_trip():
    stacks = family(50, seed=7)
    plan = SweepPlan(-5.0, 5.0, 0.1)
    worst_t = worst_n = 0.0
    start = time.perf_counter()
    for s in stacks:
        measured = cv_curve(s, plan)
        guess = DeviceStack.mos(s.oxide.thickness_nm * 1.15, s.oxide.area, s.substrate.polarity,
                                s.substrate.doping * 0.6)
        r = fit_cv(measured, guess, ("t_ox", "doping"))
        worst_t = max(worst_t, abs(r.t_ox / s.oxide.thickness_nm - 1))
        worst_n = max(worst_n, abs(r.substrate_doping / s.substrate.doping - 1))
    elapsed = time.perf_counter() - start
    record("AC7", worst_t <= 5e-3 and worst_n <= 1e-2 and elapsed < 30,
           f"50 noiseless fits: worst t_ox error {worst_t:.2e} (tol 5e-3), "
           f"worst doping error {worst_n:.2e} (tol 1e-2), {elapsed:.1f} s (limit 30 s)")


def test_ac8_determinism(tmp_path):
    stack = str(DATA / "p_1e16.stack")

    def sweep():
        return subprocess.run(
            [sys.executable, "-m", "moscap", "sweep", stack, "--noise", "0.05pF", "--seed", "42"],
            capture_output=True, check=True).stdout

    first, second = sweep(), sweep()
    csv_path = tmp_path / "s.csv"
    csv_path.write_bytes(first)
    svgs = []
    for name in ("a.svg", "b.svg"):
        subprocess.run([sys.executable, "-m", "moscap", "plot", str(csv_path), "--out", str(tmp_path / name)],
                       check=True)
        svgs.append((tmp_path / name).read_bytes())
    ok = first == second and len(first) > 0 and svgs[0] == svgs[1]
    record("AC8", ok, f"sweep CSV identical across processes: {first == second}; "
                      f"plot SVG identical: {svgs[0] == svgs[1]} ({len(svgs[0])} bytes)")
