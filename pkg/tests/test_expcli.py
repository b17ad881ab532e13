import csv
import hashlib
import io
import math
from pathlib import Path

import pytest

from swiptrb.expcli import cli, selftest
from swiptrb.expcli.kinds import KINDS
from swiptrb.expcli.runner import PointError, run_experiment
from swiptrb.expcli.spec import SpecError, content_hash, load_spec, parse_spec
from swiptrb.expcli.units import UnitError, parse_quantity, to_db, to_dbm, unit_convert

SPEC_DIR = Path(cli.__file__).parent / "specs"

SMALL = """\
name = "small"
kind = "power_vs_h"
engines = ["analytic", "montecarlo"]
output = "small.csv"

[sweep]
variable = "h"
start = 0.5
stop = 1.5
points = 3

[fixed]
p_tx = "30 dBm"
theta = "-40 dB"
sigma2 = "-40 dBm"
n_t = 2
n_beams = [1, 2]
abar = [0.5]

[mc]
n_subblock_draws = 4000
seed = 9
"""


def write(tmp_path, text, name="s.spec"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestUnits:
    def test_examples(self):
        assert unit_convert(30, "dBm") == pytest.approx(1.0, rel=1e-15)
        assert unit_convert(-40, "dB") == pytest.approx(1e-4, rel=1e-15)
        assert unit_convert(0, "dB") == 1.0
        assert unit_convert(-40, "dBm") == pytest.approx(1e-7, rel=1e-15)
        assert unit_convert(5, "mW") == pytest.approx(5e-3)
        assert unit_convert(424, "uW") == pytest.approx(4.24e-4)
        assert unit_convert(2.5, "linear") == 2.5

    @pytest.mark.parametrize("x", [-37.3, 0.0, 12.5, 70.0])
    def test_round_trips(self, x):
        assert to_dbm(unit_convert(x, "dBm")) == pytest.approx(x, abs=1e-12)
        assert to_db(unit_convert(x, "dB")) == pytest.approx(x, abs=1e-12)

    def test_unknown_unit(self):
        with pytest.raises(UnitError):
            unit_convert(1.0, "dBW")

    def test_parse_quantity(self):
        assert parse_quantity("30 dBm") == pytest.approx(1.0)
        assert parse_quantity("-40dB") == pytest.approx(1e-4)
        assert parse_quantity(1e-7) == 1e-7
        assert parse_quantity("1e-3 W") == pytest.approx(1e-3)
        for bad in ("thirty dBm", True, None):
            with pytest.raises(UnitError):
                parse_quantity(bad)


class TestSpecParsing:
    def test_small(self):
        s = parse_spec(SMALL)
        assert s.kind == "power_vs_h"
        assert s.sweep.values == pytest.approx((0.5, 1.0, 1.5))
        assert s.fixed["p_tx"] == pytest.approx(1.0)
        assert s.fixed["sigma2"] == pytest.approx(1e-7)
        assert s.fixed["zeta"] == 1.0
        assert s.seed == 9 and s.mc.n_subblock_draws == 4000

    def test_hash_is_git_blob(self):
        data = SMALL.encode()
        expected = hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
        assert parse_spec(SMALL).content_hash == content_hash(data) == expected

    def test_overrides(self):
        s = parse_spec(SMALL).with_seed(77).with_workers(3)
        assert s.seed == 77 and s.mc.worker_count == 3

    def test_sweep_units_and_log_scale(self):
        text = SMALL.replace('variable = "h"\nstart = 0.5\nstop = 1.5\npoints = 3',
                             'variable = "p_tx"\nunit = "dBm"\nvalues = [20, 30]').replace(
            'p_tx = "30 dBm"', "h = [1.0]")
        s = parse_spec(text)
        assert s.sweep.values == pytest.approx((0.1, 1.0))
        assert s.sweep.display == (20.0, 30.0)
        log = parse_spec(SMALL.replace("points = 3", "points = 3\nscale = \"log\""))
        assert log.sweep.values[1] == pytest.approx(math.sqrt(0.75))

    @pytest.mark.parametrize("old,new,field", [
        ("n_beams = [1, 2]", "n_beams = [1, 3]", "fixed.n_beams[1]"),
        ('p_tx = "30 dBm"', "p_tx = -1.0", "fixed.p_tx"),
        ("n_beams = [1, 2]\n", "", "fixed.n_beams"),
        ("abar = [0.5]", "abar = [-0.5]", "fixed.abar[0]"),
        ('kind = "power_vs_h"', 'kind = "bogus"', "kind"),
        ("stop = 1.5", "stop = 0.1", "sweep.stop"),
        ('output = "small.csv"', 'output = "small.txt"', "output"),
        ("seed = 9", "seed = -1", "mc.seed"),
        ("seed = 9", "sede = 9", "mc.sede"),
        ('engines = ["analytic", "montecarlo"]', 'engines = ["exact"]', "engines"),
        ('p_tx = "30 dBm"', 'p_tx = "30 dBx"', "fixed.p_tx"),
        ("n_t = 2", "n_t = 2\ncolour = 1", "fixed.colour"),
        ("points = 3", "points = 0", "sweep.points"),
    ])
    def test_named_errors(self, old, new, field):
        assert old in SMALL
        with pytest.raises(SpecError) as exc:
            parse_spec(SMALL.replace(old, new))
        assert exc.value.field == field
        assert str(exc.value).startswith(field)

    def test_tau_outside_unit_interval(self):
        text = (SPEC_DIR / "fig08.spec").read_text()
        assert "tau = [0.5]" in text
        with pytest.raises(SpecError) as exc:
            parse_spec(text.replace("tau = [0.5]", "tau = [1.5]"))
        assert exc.value.field == "fixed.tau[0]"

    def test_invalid_toml(self):
        with pytest.raises(SpecError) as exc:
            parse_spec("name = ")
        assert exc.value.field == "<file>"

    def test_sweep_variable_must_match_kind(self):
        with pytest.raises(SpecError) as exc:
            parse_spec(SMALL.replace('variable = "h"', 'variable = "tau"'))
        assert exc.value.field == "sweep.variable"

    def test_engine_not_supported_by_kind(self):
        text = (SPEC_DIR / "fig07.spec").read_text()
        with pytest.raises(SpecError) as exc:
            parse_spec(text.replace('engines = ["analytic"]', 'engines = ["analytic", "montecarlo"]'))
        assert exc.value.field == "engines"

    @pytest.mark.parametrize("path", sorted(SPEC_DIR.glob("*.spec")), ids=lambda p: p.stem)
    def test_shipped_specs_validate(self, path):
        s = load_spec(path)
        assert s.output == f"{path.stem}.csv"
        assert s.kind in KINDS

    def test_every_kind_has_a_shipped_spec(self):
        kinds = {load_spec(p).kind for p in SPEC_DIR.glob("*.spec")}
        assert kinds == set(KINDS)


class TestRunner:
    def test_csv_layout(self, tmp_path):
        spec = parse_spec(SMALL)
        summary = run_experiment(spec, tmp_path)
        rows = list(csv.reader(io.StringIO(summary.csv_path.read_text())))
        head = rows[0]
        assert head[:5] == ["spec", "engine", "seed", "spec_hash", "h[1]"]
        assert "power_n1_abar0.5[W]" in head and "power_n1_abar0.5_stderr[W]" in head
        assert len(rows) == 1 + 2 * 3 == 1 + summary.n_rows
        for r in rows[1:]:
            assert r[0] == "small" and r[2] == "9" and r[3] == spec.content_hash
        assert [r[1] for r in rows[1:]] == ["analytic"] * 3 + ["montecarlo"] * 3
        assert summary.max_z < 5

    def test_floats_have_17_digits(self, tmp_path):
        summary = run_experiment(parse_spec(SMALL), tmp_path)
        rows = list(csv.reader(io.StringIO(summary.csv_path.read_text())))
        col = rows[0].index("power_n1_abar0.5[W]")
        v = rows[1][col]
        # h = 0.5, N = 1, abar = 0.5: theta P h Gamma(2, 1).
        assert float(v) == pytest.approx(1e-4 * 0.5 * 2.0 * math.exp(-1.0), rel=1e-15)
        assert v == format(float(v), ".17g")

    def test_byte_identical_reruns(self, tmp_path):
        a = run_experiment(parse_spec(SMALL), tmp_path / "a").csv_path.read_bytes()
        b = run_experiment(parse_spec(SMALL).with_workers(4), tmp_path / "b").csv_path.read_bytes()
        assert a == b

    def test_plot_script(self, tmp_path):
        summary = run_experiment(parse_spec(SMALL), tmp_path)
        gp = summary.plot_path.read_text()
        assert summary.plot_path.name == "small.gp"
        assert 'set datafile separator ","' in gp
        assert '"small.csv" skip 1' in gp
        assert "yerrorbars" in gp and "with lines" in gp

    def test_point_error_names_the_point(self, tmp_path, monkeypatch):
        kind = KINDS["power_vs_h"]

        def boom(ctx, x):
            raise ArithmeticError("overflow")

        monkeypatch.setattr(kind, "point", boom)
        with pytest.raises(PointError) as exc:
            run_experiment(parse_spec(SMALL), tmp_path)
        assert "sweep point 0" in str(exc.value) and "small" in str(exc.value)


class TestCli:
    def test_run(self, tmp_path, capsys):
        spec = write(tmp_path, SMALL)
        assert cli.main(["run", str(spec), "--out-dir", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "small.csv").exists()
        assert (tmp_path / "out" / "small.gp").exists()
        assert "wall time" in capsys.readouterr().out

    def test_env_output_dir(self, tmp_path, monkeypatch):
        spec = write(tmp_path, SMALL)
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path / "env"))
        assert cli.main(["run", str(spec)]) == 0
        assert (tmp_path / "env" / "small.csv").exists()

    def test_seed_override(self, tmp_path):
        spec = write(tmp_path, SMALL)
        cli.main(["run", str(spec), "--out-dir", str(tmp_path / "a"), "--seed", "123"])
        rows = list(csv.reader((tmp_path / "a" / "small.csv").open()))
        assert {r[2] for r in rows[1:]} == {"123"}
        cli.main(["run", str(spec), "--out-dir", str(tmp_path / "b")])
        mc_a = [r for r in rows if r[1] == "montecarlo"]
        mc_b = [r for r in csv.reader((tmp_path / "b" / "small.csv").open()) if r[1] == "montecarlo"]
        assert [r[5:] for r in mc_a] != [r[5:] for r in mc_b]

    def test_validate(self, tmp_path, capsys):
        assert cli.main(["validate", str(write(tmp_path, SMALL))]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validation_exit_code(self, tmp_path, capsys):
        bad = write(tmp_path, SMALL.replace("n_beams = [1, 2]", "n_beams = [3]"))
        assert cli.main(["validate", str(bad)]) == 2
        assert cli.main(["run", str(bad), "--out-dir", str(tmp_path)]) == 2
        assert "fixed.n_beams[0]" in capsys.readouterr().err

    def test_io_exit_code(self, tmp_path):
        assert cli.main(["validate", str(tmp_path / "missing.spec")]) == 4
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert cli.main(["run", str(write(tmp_path, SMALL)), "--out-dir", str(blocker / "sub")]) == 4

    def test_numeric_exit_code(self, tmp_path, monkeypatch, capsys):
        def boom(ctx, x):
            raise ArithmeticError("overflow")

        monkeypatch.setattr(KINDS["power_vs_h"], "point", boom)
        assert cli.main(["run", str(write(tmp_path, SMALL)), "--out-dir", str(tmp_path)]) == 3
        assert "numeric failure" in capsys.readouterr().err

    def test_list_kinds(self, capsys):
        assert cli.main(["list-kinds"]) == 0
        out = capsys.readouterr().out
        for name in KINDS:
            assert f"{name}:" in out

    def test_bad_flag_values(self):
        with pytest.raises(SystemExit):
            cli.main(["run", "x.spec", "--workers", "0"])
        with pytest.raises(SystemExit):
            cli.main(["selftest", "--seed", "-3"])


class TestSelftest:
    def test_grid_shape(self):
        cases = selftest.grid()
        assert len(cases) == 9
        assert {c.n_beams for c in cases if c.name.startswith("tsg")} == {1, 2, 4}

    def test_small_run_writes_csv(self, tmp_path, capsys):
        code = cli.main(["selftest", "--draws", "20000", "--out-dir", str(tmp_path)])
        text = (tmp_path / "selftest.csv").read_text()
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == 27
        assert code == (0 if all(r["within_3se"] == "yes" for r in rows) else 3)
        assert "selftest:" in capsys.readouterr().out

    def test_failures_exit_numeric(self, tmp_path, monkeypatch):
        real = selftest.analytic_values

        def skewed(case):
            v = real(case)
            v["power"] *= 1.5
            return v

        monkeypatch.setattr(selftest, "analytic_values", skewed)
        assert cli.main(["selftest", "--draws", "20000", "--out-dir", str(tmp_path)]) == 3
