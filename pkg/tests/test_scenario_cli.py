import csv
import json
import math

import numpy as np
import pytest

from squintmove.channel import SPEED_OF_LIGHT
from squintmove.cli import compare, main, run
from squintmove.gain import GainProfile, gain_profile
from squintmove.scenario import Scenario, ScenarioError, load_scenario, preset, write_scenario


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_empty_file_gives_full_defaults(tmp_path):
    p = tmp_path / "s.json"
    p.write_text("")
    sc = load_scenario(p)
    assert (sc.M, sc.K, sc.J, sc.L) == (16, 256, 1, 128)
    fc = 289.44e9
    assert sc.f_c == fc
    assert sc.d_bs_m == SPEED_OF_LIGHT / (2 * fc) == sc.d_irs_m
    assert sc.a_bs_x_m == pytest.approx(25 * SPEED_OF_LIGHT / fc)
    assert sc.a_irs_y_m == pytest.approx(50 * SPEED_OF_LIGHT / fc)


def test_subarray_spacing_default():
    sc = Scenario(J1=2, J2=3)
    assert sc.d_irs_m == pytest.approx((1 + math.sqrt(5)) * SPEED_OF_LIGHT / (2 * sc.f_c))


def test_override_gives_desk(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"M": 8, "K": 32, "L": 32}))
    assert load_scenario(p) == preset("desk")


@pytest.mark.parametrize("data,msg", [
    ({"f0_hz": 3e11, "fL_hz": 2e11}, "below"),
    ({"M": 0}, "positive integer"),
    ({"bogus": 1}, "unknown scenario keys"),
    ({"angles": {"bs_azimuth": 0.1}}, "unknown angle keys"),
    ({"solver": {"rel_tol": -1}}, "positive"),
    ({"M": 2000}, "does not fit"),
    ({"d_bs_m": -1.0}, "positive"),
])
def test_rejections(data, msg):
    with pytest.raises(ScenarioError, match=msg):
        Scenario.from_dict(data)


def test_bad_json(tmp_path):
    p = tmp_path / "s.json"
    p.write_text("{nope")
    with pytest.raises(ScenarioError):
        load_scenario(p)
    p.write_text("[1, 2]")
    with pytest.raises(ScenarioError):
        load_scenario(p)


def test_round_trip(tmp_path):
    sc = Scenario.from_dict({"M": 4, "K": 9, "J1": 2, "L": 10, "angles": {"bs_azimuth_rad": 0.3},
                             "solver": {"rel_tol": 1e-5}, "normalize": True, "d_g_m": 3.25})
    write_scenario(sc, tmp_path / "s.json")
    back = load_scenario(tmp_path / "s.json")
    assert back == sc
    assert back.angles.bs_azimuth == 0.3 and back.solver.rel_tol == 1e-5


def test_compare_self_and_single_tone():
    sc = preset("desk")
    p = gain_profile(*sc.baseline_layouts(), sc.tones, sc.angles)
    c = compare(p, p)
    assert c.spread_ratio == 1.0 and np.all(c.ratio == 1.0)
    one = GainProfile(*(np.array([v]) for v in (2.0, 3.0, 1.0, 1.0, 1.0)), 2, 3)
    c1 = compare(one, one)
    assert c1.a.spread == 0.0 and c1.spread_ratio == 1.0


def test_compare_grid_mismatch():
    a = preset("desk")
    b = Scenario.from_dict({"M": 8, "K": 32, "L": 30})
    pa = gain_profile(*a.baseline_layouts(), a.tones, a.angles)
    pb = gain_profile(*b.baseline_layouts(), b.tones, b.angles)
    with pytest.raises(ValueError):
        compare(pa, pb)


def test_baseline_mode_center_identity(tmp_path):
    sc = preset("desk")
    run(sc, "baseline", tmp_path)
    rows = _rows(tmp_path / "amplitude.csv")
    assert {r["variant"] for r in rows} == {"fpa"}
    center = rows[sc.tones.center_index]
    assert float(center["g_bs"]) == sc.M and float(center["g_irs"]) == sc.K
    assert float(center["normalized_amplitude"]) == 1.0
    assert not (tmp_path / "convergence.csv").exists()


@pytest.fixture(scope="module")
def desk_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk")
    code = main(["--preset", "desk", "--mode", "both", "--out", str(out), "--rel-tol", "1e-3"])
    return code, out


def test_cli_both_writes_everything(desk_out):
    code, out = desk_out
    assert code == 0
    conv = _rows(out / "convergence.csv")
    power = [float(r["min_band_power"]) for r in conv]
    assert all(b >= a for a, b in zip(power, power[1:]))
    assert [int(r["iteration"]) for r in conv] == list(range(len(conv)))
    amp = _rows(out / "amplitude.csv")
    assert [v for v in dict.fromkeys(r["variant"] for r in amp)] == ["fpa", "initial", "optimized"]
    lay = _rows(out / "layouts.csv")
    assert sum(r["variant"] == "optimized" and r["array"] == "bs" for r in lay) == 8
    assert sum(r["variant"] == "optimized" and r["array"] == "irs" for r in lay) == 32
    assert load_scenario(out / "scenario.json").solver.rel_tol == 1e-3


def test_normalized_amplitude_bounds(desk_out):
    _, out = desk_out
    sc = preset("desk")
    r = sc.tones.alpha[0] / sc.tones.alpha_center
    for row in _rows(out / "amplitude.csv"):
        n = float(row["normalized_amplitude"])
        assert 0 <= n <= r * (1 + 1e-12)


def test_cli_is_deterministic(desk_out, tmp_path):
    _, out = desk_out
    assert main(["--preset", "desk", "--out", str(tmp_path), "--rel-tol", "1e-3"]) == 0
    for name in ("convergence.csv", "amplitude.csv", "layouts.csv"):
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


def test_floats_have_17_digits(desk_out):
    _, out = desk_out
    row = _rows(out / "amplitude.csv")[1]
    assert float(repr(float(row["amplitude"]))) == float(row["amplitude"])
    assert len(row["amplitude"].split("e")[0].replace(".", "").lstrip("0")) >= 15


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"f0_hz": 3e11, "fL_hz": 2e11}))
    assert main(["--scenario", str(bad), "--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err
    assert main(["--preset", "desk", "--max-iters", "0", "--out", str(tmp_path)]) != 0
    with pytest.raises(SystemExit):
        main(["--preset", "nope"])


def test_cli_summary(tmp_path, capsys):
    assert main(["--preset", "desk", "--mode", "optimize", "--max-iters", "1",
                 "--normalize", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "normalized min-band power before" in out and "iterations 1" in out
