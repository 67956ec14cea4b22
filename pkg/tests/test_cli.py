import io
from pathlib import Path

import pytest

import moscap.cli as cli
from moscap import extract_area
from moscap.fileio import parse_cv_csv, parse_extraction_result, parse_profile_csv, parse_stack_config

DATA = Path(__file__).resolve().parent.parent / "data"
P_PLUS = str(DATA / "al_p_plus.stack")
P16 = str(DATA / "p_1e16.stack")
MIM = str(DATA / "metal1_metal2.stack")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bundled_stacks_are_calibrated():
    assert parse_stack_config(Path(P_PLUS).read_text()).oxide.area == pytest.approx(
        extract_area(28.62e-12, 500), rel=1e-8)
    assert parse_stack_config(Path(MIM).read_text()).oxide.area == pytest.approx(
        extract_area(16e-12, 500), rel=1e-8)


class TestModel:
    def test_calibrated_stack(self, capsys):
        code, out, err = run(capsys, "model", P_PLUS)
        assert code == 0 and err == ""
        assert out.splitlines()[0].startswith("C_ox = 2.862e-11 F")
        assert {ln.split(" = ")[0] for ln in out.splitlines()} == {"C_ox", "V_fb", "V_T", "C_min"}

    def test_mim(self, capsys):
        code, out, _ = run(capsys, "model", MIM)
        assert code == 0
        assert out == "C_ox = 1.6e-11 F (16.00 pF)\n"

    def test_verbose_defaults_on_stderr(self, capsys):
        code, out, err = run(capsys, "model", "-v", P16)
        assert code == 0
        assert "default applied: epsilon_r = 3.9" in err
        assert "default" not in out


class TestUsage:
    def test_unknown_subcommand(self, capsys):
        code, out, err = run(capsys, "frobnicate")
        assert code == 1 and out == ""
        assert "usage:" in err

    def test_no_subcommand(self, capsys):
        assert run(capsys)[0] == 1

    def test_missing_file(self, capsys, tmp_path):
        code, out, err = run(capsys, "model", str(tmp_path / "nope.stack"))
        assert code == 1 and out == "" and "error:" in err

    def test_bad_config_is_parse_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.stack"
        bad.write_text("kind = mos\nflavour = strange\n")
        code, _, err = run(capsys, "model", str(bad))
        assert code == 1 and "line 2" in err

    def test_invalid_physical_input(self, capsys, tmp_path):
        bad = tmp_path / "neg.stack"
        bad.write_text(Path(P16).read_text().replace("500 nm", "-5 nm"))
        code, out, err = run(capsys, "model", str(bad))
        assert code == 3 and out == "" and "out of range" in err

    def test_negative_noise(self, capsys):
        assert run(capsys, "sweep", P16, "--noise=-1pF")[0] == 3


class TestSweep:
    def test_stdout_csv(self, capsys):
        code, out, err = run(capsys, "sweep", P16, "--start", "-5", "--stop", "5", "--step", "0.1")
        assert code == 0
        curve = parse_cv_csv(out)
        assert len(curve) == 101

    def test_out_file_and_verbose(self, capsys, tmp_path):
        target = tmp_path / "s.csv"
        code, out, err = run(capsys, "sweep", "-v", P16, "--noise", "0.05pF", "--seed", "7",
                             "--regime", "low-frequency", "--stop", "12", "--out", str(target))
        assert code == 0 and out == "" and "points" in err
        assert len(parse_cv_csv(target.read_text())) == 171


class TestExtract:
    def test_junction(self, capsys):
        code, out, err = run(capsys, "extract", "junction", "0.65", "1.25", "1.45")
        assert (code, out) == (0, "0.8 um\n")

    def test_junction_with_units(self, capsys):
        assert run(capsys, "extract", "junction", "650nm", "1.25um", "1450nm")[1] == "0.8 um\n"

    def test_junction_wrong_arity(self, capsys):
        assert run(capsys, "extract", "junction", "0.65", "1.45")[0] == 1

    def test_junction_bad_order(self, capsys):
        assert run(capsys, "extract", "junction", "1.45", "1.25", "0.65")[0] == 3

    def test_tox_and_area(self, capsys):
        code, out, _ = run(capsys, "extract", "tox", "--cox", "28.62pF", "--area", "4.14602347e-3cm2")
        assert code == 0 and out == "500 nm\n"
        code, out, _ = run(capsys, "extract", "area", "--cox", "16pF", "--tox", "500nm")
        assert out == "0.00231783 cm2\n"

    def test_tox_from_csv(self, capsys, tmp_path):
        csv = tmp_path / "c.csv"
        run(capsys, "sweep", P_PLUS, "--out", str(csv))
        code, out, _ = run(capsys, "extract", "tox", "--csv", str(csv), "--area", "4.14602347e-3cm2")
        assert code == 0 and float(out.split()[0]) == pytest.approx(500, rel=1e-6)

    def test_doping(self, capsys, tmp_path):
        csv = tmp_path / "c.csv"
        run(capsys, "sweep", P16, "--stop", "12", "--step", "0.02", "--out", str(csv))
        code, out, _ = run(capsys, "extract", "doping", "--csv", str(csv), "--area", "4.14602347e-3cm2")
        assert code == 0 and float(out.split()[0]) == pytest.approx(1e16, rel=2e-3)

    def test_doping_degenerate(self, capsys):
        code, _, err = run(capsys, "extract", "doping", "--cox", "20pF", "--cmin", "20pF", "--area", "1e-3cm2")
        assert code == 3 and "C_min" in err

    def test_profile_and_auto_junction(self, capsys, tmp_path):
        csv = tmp_path / "c.csv"
        run(capsys, "sweep", P16, "--start", "-0.5", "--stop", "6.5", "--step", "0.05", "--out", str(csv))
        prof = tmp_path / "p.csv"
        code, out, _ = run(capsys, "extract", "profile", "--csv", str(csv), "--area", "4.14602347e-3cm2",
                           "--out", str(prof))
        assert code == 0 and out == ""
        profile = parse_profile_csv(prof.read_text())
        assert profile.concentration[len(profile) // 2] == pytest.approx(1e16, rel=0.02)

    def test_profile_non_monotone(self, capsys, tmp_path):
        csv = tmp_path / "c.csv"
        run(capsys, "sweep", P16, "--regime", "low-frequency", "--stop", "15", "--out", str(csv))
        code, _, err = run(capsys, "extract", "profile", "--csv", str(csv), "--area", "1e-3cm2")
        assert code == 3 and "monotone" in err


class TestFit:
    def test_round_trip(self, capsys, tmp_path):
        csv = tmp_path / "c.csv"
        run(capsys, "sweep", P16, "--noise", "0.02pF", "--seed", "5", "--out", str(csv))
        out_file = tmp_path / "fit.txt"
        code, out, err = run(capsys, "fit", str(csv), P16, "--free", "t_ox,doping", "--out", str(out_file))
        assert code == 0 and out == ""
        result = parse_extraction_result(out_file.read_text())
        assert result.converged
        assert result.t_ox == pytest.approx(500, rel=0.01)

    def test_stdout_is_pure_data(self, capsys, tmp_path):
        csv = tmp_path / "c.csv"
        run(capsys, "sweep", P16, "--out", str(csv))
        code, out, err = run(capsys, "fit", "-v", str(csv), P16)
        assert code == 0 and "converged in" in err
        parse_extraction_result(out)

    def test_non_convergence_exit_2(self, capsys, tmp_path, monkeypatch):
        csv = tmp_path / "c.csv"
        run(capsys, "sweep", P16, "--noise", "0.05pF", "--out", str(csv))
        real = cli.fit_cv
        monkeypatch.setattr(cli, "fit_cv", lambda *a, **k: real(*a, max_iterations=1, **k))
        stack = tmp_path / "far.stack"
        stack.write_text(Path(P16).read_text().replace("500 nm", "200 nm"))
        code, out, err = run(capsys, "fit", str(csv), str(stack))
        assert code == 2 and "did not converge" in err
        assert parse_extraction_result(out).converged is False

    def test_rank_deficient_exit_2(self, capsys, tmp_path):
        csv = tmp_path / "c.csv"
        run(capsys, "sweep", MIM, "--out", str(csv))
        stack = tmp_path / "m.stack"
        stack.write_text(Path(MIM).read_text().replace("500 nm", "450 nm"))
        code, _, err = run(capsys, "fit", str(csv), str(stack), "--free", "t_ox,area")
        assert code == 2 and "told apart" in err


class TestPlotAndReference:
    def test_plot(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "sweep", P16, "--out", str(a))
        run(capsys, "sweep", P_PLUS, "--out", str(b))
        svg = tmp_path / "cv.svg"
        code, out, _ = run(capsys, "plot", str(a), str(b), "--labels", "1e16,p+", "--out", str(svg))
        assert code == 0 and out == ""
        text = svg.read_text()
        assert text.lstrip().startswith("<?xml") and 'id="series-1"' in text

    def test_reference_report_and_figures(self, capsys, tmp_path):
        figs = tmp_path / "figs"
        code, out, err = run(capsys, "reference", "--figures", str(figs))
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "series,t_ox_nm,published_pF,model_pF,deviation_pct"
        assert len(lines) == 10
        assert sorted(p.name for p in figs.iterdir()) == [
            "al_n_plus_cv.svg", "al_p_plus_cv.svg", "metal1_metal2_cv.svg", "thickness_comparison.svg"]

    def test_reference_single_and_unknown(self, capsys):
        code, out, _ = run(capsys, "reference", "metal1_metal2")
        assert code == 0 and len(out.splitlines()) == 4
        assert run(capsys, "reference", "bogus")[0] == 1


def test_no_color_env(monkeypatch):
    class Tty(io.StringIO):
        def isatty(self):
            return True

    monkeypatch.setattr(cli.sys, "stderr", Tty())
    monkeypatch.delenv("MOSCAP_NO_COLOR", raising=False)
    assert "\033[" in cli._styled("error:")
    monkeypatch.setenv("MOSCAP_NO_COLOR", "1")
    assert cli._styled("error:") == "error:"
