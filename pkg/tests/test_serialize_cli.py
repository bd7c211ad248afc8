import csv
import io
import json

import numpy as np
import pytest

from qcur import channels, cli, serialize, states, tomo
from qcur.qmat import ValidationError
from qcur.steering import MeasurementSet, assemblage_from_state


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSerialize:
    def test_round_sig(self):
        assert serialize.round_sig(1 / 3) == 0.333333333
        assert serialize.round_sig({"a": [2 / 3, "x", None]}) == {"a": [0.666666667, "x", None]}
        assert serialize.round_sig(0.0) == 0.0

    def test_dumps_sorted(self):
        assert serialize.dumps({"b": 1, "a": 2}).index('"a"') < serialize.dumps({"b": 1, "a": 2}).index('"b"')

    def test_matrix_roundtrip(self):
        m = np.array([[1 + 2j, 0.5], [3, -1j]])
        np.testing.assert_array_equal(serialize.matrix_from_json(serialize.matrix_to_json(m)), m)

    def test_assemblage_roundtrip(self):
        asm = assemblage_from_state(states.haar_random_state(4, 0), MeasurementSet.pauli())
        back = serialize.loads(json.dumps(serialize.assemblage_to_json(asm)))
        for a, b in zip(asm.members, back.members):
            np.testing.assert_allclose(a, b, atol=1e-15)

    def test_channel_roundtrip(self):
        ch = channels.random_ico(3, 2, 1)
        back = serialize.loads(json.dumps(serialize.channel_to_json(ch)))
        np.testing.assert_allclose(back.kraus, ch.kraus, atol=1e-15)

    def test_measurement_set_roundtrip(self):
        m = MeasurementSet.pauli((1, 2, 3))
        back = serialize.loads(json.dumps(serialize.measurement_set_to_json(m)))
        for p, q in zip(m.settings, back.settings):
            np.testing.assert_allclose(p.effects, q.effects)

    def test_wiring_roundtrip(self):
        w = channels.WiringMap.random(2, 2, 3)
        back = serialize.loads(json.dumps(serialize.wiring_to_json(w)))
        np.testing.assert_allclose(back.p_ap_given, w.p_ap_given)

    def test_syntax_error_location(self):
        with pytest.raises(ValidationError, match="line 3, column"):
            serialize.loads('{\n  "type": "wiring",\n  "p": [1,,2]\n}')

    def test_unknown_type(self):
        with pytest.raises(ValidationError, match="unknown document type"):
            serialize.loads('{"type": "banana"}')

    def test_missing_field(self):
        with pytest.raises(ValidationError):
            serialize.loads('{"type": "measurement_set", "dim": 2}')

    def test_invalid_povm_rejected(self):
        doc = serialize.measurement_set_to_json(MeasurementSet.pauli())
        doc["settings"][0][0]["re"][0] = 0.9
        with pytest.raises(ValidationError):
            serialize.loads(json.dumps(doc))


class TestFigures:
    def test_fig2b_small(self, capsys):
        code, out, _ = run(capsys, "fig2b", "--steps", "4")
        assert code == 0
        rows = rows_of(out)
        assert [r["q"] for r in rows] == ["0", "0.25", "0.5", "0.75", "1"]
        assert float(rows[2]["sivp_ideal"]) == 1.0
        assert float(rows[1]["sivp_ideal"]) == pytest.approx(0.811278124, abs=1e-9)
        assert float(rows[0]["sivp_ideal"]) == 0.0
        assert float(rows[2]["sivp_noisy"]) == pytest.approx(0.799835849, abs=1e-9)

    def test_fig2b_noiseless_six(self, capsys):
        _, out, _ = run(capsys, "fig2b", "--steps", "6", "--noise-p", "0")
        half = [r for r in rows_of(out) if float(r["q"]) == 0.5]
        assert float(half[0]["sivp_noisy"]) == 1.0

    def test_fig2b_json(self, capsys):
        _, out, _ = run(capsys, "fig2b", "--steps", "2", "--format", "json")
        doc = json.loads(out)
        assert len(doc) == 3 and doc[1]["q"] == 0.5

    def test_fig2c(self, capsys):
        _, out, _ = run(capsys, "fig2c", "--rmin", "0.9", "--rmax", "0.9", "--steps", "1")
        assert float(rows_of(out)[0]["sivp_ideal"]) == pytest.approx(0.531004406, abs=1e-9)

    def test_fig2c_noise_lowers(self, capsys):
        _, out, _ = run(capsys, "fig2c", "--steps", "10")
        for r in rows_of(out):
            assert float(r["sivp_noisy"]) <= float(r["sivp_ideal"]) + 1e-12

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "b.csv"
        run(capsys, "fig2b", "--steps", "2", "-o", str(target))
        assert target.read_text().startswith("q,sivp_ideal,sivp_noisy")

    def test_byte_identical(self, capsys):
        a = run(capsys, "fig2c", "--steps", "20")[1]
        b = run(capsys, "fig2c", "--steps", "20")[1]
        assert a == b

    @pytest.mark.parametrize("argv", [
        ["fig2b", "--qmin", "0.8", "--qmax", "0.2"],
        ["fig2b", "--qmax", "1.5"],
        ["fig2b", "--noise-p", "-0.1"],
        ["fig2b", "--steps", "0"],
        ["fig2c", "--noise-plus", "2"],
        ["nonsense"],
    ])
    def test_usage_errors(self, argv, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(argv)
        assert e.value.code == 2


class TestOneWay:
    def test_classify(self):
        assert cli.classify(0.1, 0.2) == "I"
        assert cli.classify(0.0, 0.2) == "II"
        assert cli.classify(0.0, 1e-11) == "III"

    def test_corners_and_region_two(self):
        rows = cli.oneway_scan(8, 8)
        by_point = {(r[0], r[1]): r[4] for r in rows}
        assert by_point[(1.0, 0.25 * np.pi)] == "I"
        assert by_point[(0.75, 0.005)] == "III"
        assert any(r[4] == "II" for r in rows)

    def test_stderr_counts(self, capsys):
        code, out, err = run(capsys, "oneway", "--grid-s", "3", "--grid-theta", "3")
        assert code == 0
        assert len(rows_of(out)) == 9
        assert err.startswith("regions: I=")


class TestProperties:
    def test_gio_pass(self, capsys):
        code, out, err = run(capsys, "properties", "gio", "--trials", "50", "--seed", "3")
        assert code == 0
        doc = json.loads(out)
        assert doc["passed"] and doc["seed"] == 3 and doc["trials"] == 50
        assert err.startswith("PASS")

    def test_seed_required(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["properties", "ico", "--trials", "5"])
        assert e.value.code == 2

    def test_cptp_regression_fails(self, capsys):
        code, out, err = run(capsys, "properties", "cptp-regression")
        assert code == 1
        doc = json.loads(out)
        assert doc["details"]["checks"] == {"before": True, "after": False, "lambda1": True}
        assert doc["counterexample"]["channel"]["type"] == "kraus_channel"

    def test_reproducible(self, capsys):
        a = run(capsys, "properties", "lhs", "--trials", "20", "--seed", "1")[1]
        b = run(capsys, "properties", "lhs", "--trials", "20", "--seed", "1")[1]
        assert a == b


class TestIncompat:
    def test_pauli(self, capsys):
        code, out, _ = run(capsys, "incompat", "--builtin", "pauli-xz", "--seed", "0", "--grid", "11", "--budget", "400")
        assert code == 0
        doc = json.loads(out)
        assert doc["value"] == pytest.approx(1.0, abs=1e-3)
        assert doc["lower_bound"] is True

    def test_smeared(self, capsys):
        _, out, _ = run(capsys, "incompat", "--builtin", "smeared-xz", "--eta", "0.6", "--seed", "0", "--grid", "11")
        assert json.loads(out)["value"] <= 1e-6

    def test_single_povm_file(self, capsys, tmp_path):
        f = tmp_path / "m.json"
        f.write_text(json.dumps(serialize.measurement_set_to_json(MeasurementSet.pauli((3,)))))
        _, out, _ = run(capsys, "incompat", "--file", str(f), "--seed", "0")
        assert json.loads(out)["value"] == 0.0

    def test_malformed_file(self, capsys, tmp_path):
        f = tmp_path / "m.json"
        f.write_text('{"type": "measurement_set",\n "dim": }')
        code, _, err = run(capsys, "incompat", "--file", str(f), "--seed", "0")
        assert code == 3
        assert "line 2" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "incompat", "--file", str(tmp_path / "nope.json"), "--seed", "0")
        assert code == 3

    def test_both_sources(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["incompat", "--builtin", "pauli-xz", "--file", "x", "--seed", "0"])
        assert e.value.code == 2


class TestTomoCommand:
    def csv_file(self, tmp_path, rho, seed, mean_total=1e4):
        f = tmp_path / f"counts{seed}.csv"
        f.write_text(tomo.write_counts_csv(tomo.simulate_counts(rho, mean_total=mean_total, seed=seed)))
        return f

    def test_bell(self, capsys, tmp_path):
        f = self.csv_file(tmp_path, states.PHI_PLUS, 1)
        code, out, _ = run(capsys, "tomo", str(f), "--reps", "20", "--seed", "5", "--theory-q", "0.5")
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["sivp_mean"] - 1.0) <= 2 * doc["sivp_sigma"] + 0.03
        assert 0.0 <= doc["noise_fit"]["p_opt"] <= 0.05
        assert doc["noise_fit"]["fidelity"] >= 0.99

    def test_maximally_mixed(self, capsys, tmp_path):
        f = self.csv_file(tmp_path, np.eye(4) / 4, 2)
        _, out, _ = run(capsys, "tomo", str(f), "--reps", "10", "--seed", "5")
        assert json.loads(out)["sivp_mean"] <= 0.01

    def test_single_rep_sigma_null(self, capsys, tmp_path):
        f = self.csv_file(tmp_path, states.PHI_PLUS, 3)
        _, out, _ = run(capsys, "tomo", str(f), "--reps", "1", "--seed", "5")
        doc = json.loads(out)
        assert doc["sivp_sigma"] is None and doc["sigma_defined"] is False

    def test_missing_setting(self, capsys, tmp_path):
        f = tmp_path / "c.csv"
        lines = self.csv_file(tmp_path, states.PHI_PLUS, 4).read_text().splitlines()
        f.write_text("\n".join(lines[:-1]) + "\n")
        code, _, err = run(capsys, "tomo", str(f), "--seed", "0")
        assert code == 3
        assert "missing settings" in err

    def test_seed_required(self, capsys, tmp_path):
        with pytest.raises(SystemExit) as e:
            cli.main(["tomo", "x.csv"])
        assert e.value.code == 2

    def test_bad_plan(self, capsys, tmp_path):
        f = self.csv_file(tmp_path, states.PHI_PLUS, 5)
        with pytest.raises(SystemExit) as e:
            cli.main(["tomo", str(f), "--plan", "x,w", "--seed", "0"])
        assert e.value.code == 2
