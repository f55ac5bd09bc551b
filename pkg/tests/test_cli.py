import csv
import io
import json
import re

import numpy as np
import pytest

from klss.cli import main
from klss.experiments import (
    fer_config,
    lexicographic_successor,
    run_fer_point,
    wilson_interval,
)
from klss.shaping import ShapingSpec, build_alphabet


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_stats_small(capsys):
    code, out, _ = run(capsys, "stats", "--n", "4", "--m", "2", "--emax", "12")
    row = table(out)[0]
    assert code == 0
    assert (row["cardinality"], row["k"], row["rate"]) == ("5", "2", "0.5")
    assert row["k_max"] == "unbounded" and row["p_1"] == "0.8"
    assert re.search(r"^# config_digest: [0-9a-f]{16}$", out, re.M)


def test_stats_from_rate(capsys):
    code, out, _ = run(capsys, "stats", "--n", "108", "--m", "3", "--k", "162")
    row = table(out)[0]
    assert code == 0 and row["rate"] == "1.5" and row["e_max"] == "860"
    assert int(row["cardinality"]) > 2**162  # exact decimal string


def test_stats_default_kmax(capsys):
    _, a, _ = run(capsys, "stats", "--n", "6", "--emax", "60")
    _, b, _ = run(capsys, "stats", "--n", "6", "--emax", "60", "--kmax", "unbounded")
    assert a == b


def test_stats_infeasible(capsys):
    code, out, err = run(capsys, "stats", "--n", "4", "--emax", "2")
    assert code == 1 and out == "" and "all-ones" in err
    code, _, err = run(capsys, "stats", "--n", "4", "--k", "9")
    assert code == 1 and "exceed" in err


def test_json_output(capsys):
    code, out, _ = run(capsys, "stats", "--n", "4", "--m", "2", "--emax", "12", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["rows"][0]["cardinality"] == "5"
    assert doc["config"]["n"] == 4 and len(doc["config_digest"]) == 16


def test_no_exponent_notation(capsys):
    _, out, _ = run(capsys, "stats", "--n", "40", "--m", "3", "--emax", "45")
    assert not re.search(r"\d[eE][-+]?\d", out)


def test_kurtosis(capsys):
    with pytest.warns(UserWarning, match="skipping"):
        code, out, _ = run(capsys, "kurtosis", "--n-list", "8,16", "--rate-grid", "1,1.5,2,2.5")
    rows = table(out)
    assert code == 0
    assert not any(r["rate"] == "2.5" for r in rows)
    ref = {r["scheme"]: float(r["mu4"]) for r in rows if r["scheme"] in ("uniform", "gaussian")}
    assert ref["uniform"] == pytest.approx(1.38095, abs=1e-4) and ref["gaussian"] == 2.0
    full = [float(r["mu4"]) for r in rows if r["rate"] == "2"]
    assert full and all(m == pytest.approx(ref["uniform"]) for m in full)
    ess = {int(r["n"]): float(r["mu4"]) for r in rows if r["scheme"] == "ess" and r["rate"] == "1.5"}
    assert ess[16] > ess[8]
    for r in rows:
        if r["scheme"] == "klss_min":
            e = next(x for x in rows if x["scheme"] == "ess" and x["n"] == r["n"] and x["rate"] == r["rate"])
            assert float(r["mu4"]) <= float(e["mu4"])


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--n", "4", "--m", "2", "--k", "2")
    rows = table(out)
    assert code == 0 and rows[0]["k_max"] == "unbounded"
    assert "trade-off check passed" in out
    _, out, _ = run(capsys, "sweep", "--n", "2", "--m", "2", "--k", "2")
    assert len(table(out)) == 1
    _, out, _ = run(capsys, "sweep", "--n", "12", "--m", "3", "--k", "15")
    rows = table(out)
    assert sum(r["minimal"] == "true" for r in rows) == 1


def test_roundtrip_commands(capsys):
    code, out, _ = run(capsys, "roundtrip", "--n", "4", "--m", "2", "--emax", "12", "--exhaustive")
    assert code == 0 and table(out)[0]["passed"] == "true"
    code, out, _ = run(capsys, "roundtrip", "--n", "108", "--k", "162", "--samples", "300")
    assert code == 0 and table(out)[0]["checked"] == "300"
    code, out, err = run(capsys, "roundtrip", "--n", "7", "--emax", "80", "--exhaustive",
                         "--inject-fault")
    assert code == 2 and "mismatch at index" in err
    assert table(out)[0]["passed"] == "false"
    code, _, err = run(capsys, "roundtrip", "--n", "108", "--k", "162", "--exhaustive")
    assert code == 1 and "k <= 20" in err


def test_sampled_mode_checks_neighbours():
    from klss.experiments import inject_count_fault, verify_roundtrip
    from klss.shaping import build_trellis

    t = build_trellis(ShapingSpec(6, build_alphabet(3), 60))
    assert verify_roundtrip(t, samples=50, seed=1)[1] is None
    inject_count_fault(t)
    # with every index sampled, the skipped sequence shows up as an order gap
    checked, failure = verify_roundtrip(t, samples=4000, seed=1)
    assert failure is not None and "lexicographic" in failure[1]


def test_successor_matches_brute():
    from brute import admissible

    spec = ShapingSpec(5, build_alphabet(3), 90, 1400)
    seqs = [tuple(s) for s in admissible(5, 3, 90, 1400).tolist()]
    assert [lexicographic_successor(spec, s) for s in seqs] == seqs[1:] + [None]


def test_successor_oracle():
    spec = ShapingSpec(4, build_alphabet(2), 12)
    seq, out = (1, 1, 1, 1), []
    while seq is not None:
        out.append(seq)
        seq = lexicographic_successor(spec, seq)
    assert out == [(1, 1, 1, 1), (1, 1, 1, 3), (1, 1, 3, 1), (1, 3, 1, 1), (3, 1, 1, 1)]


def test_fer_noiseless(capsys):
    code, out, _ = run(capsys, "fer", "--mode", "shaped", "--snr-grid", "40", "--frames", "1000",
                       "--seed", "1", "--no-early-stop")
    row = table(out)[0]
    assert code == 0 and row["frames"] == "1000" and row["errors"] == "0"


def test_fer_reproducible(capsys):
    args = ["fer", "--mode", "uniform", "--snr-grid", "14,13", "--frames", "200", "--seed", "9"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    rows = table(a)
    assert [r["snr_db"] for r in rows] == ["13", "14"]  # sorted by grid value


def test_fer_order_independent():
    cfg, _ = fer_config("uniform")
    whole = run_fer_point(cfg, 13.5, 300, seed=4, grid_index=2, batch=300)
    split = run_fer_point(cfg, 13.5, 300, seed=4, grid_index=2, batch=70)
    assert whole["errors"] == split["errors"]


def test_fer_monotone_in_snr(capsys):
    _, out, _ = run(capsys, "fer", "--mode", "uniform", "--snr-grid", "12.5:14.5:0.5",
                    "--frames", "400", "--seed", "2", "--no-early-stop")
    rows = table(out)
    fer = np.array([float(r["fer"]) for r in rows])
    n = np.array([int(r["frames"]) for r in rows])
    for i in range(len(fer) - 1):
        sigma = np.sqrt(fer[i] * (1 - fer[i]) / n[i] + fer[i + 1] * (1 - fer[i + 1]) / n[i + 1])
        assert fer[i + 1] <= fer[i] + 3 * sigma


def test_fer_early_stop(capsys):
    _, out, _ = run(capsys, "fer", "--mode", "uniform", "--snr-grid", "8", "--frames", "5000",
                    "--batch", "100", "--target-fer", "1e-2")
    row = table(out)[0]
    assert row["stopped_early"] == "true" and int(row["frames"]) < 5000


def test_fer_launch_grid(capsys, tmp_path):
    code, out, _ = run(capsys, "fer", "--mode", "shaped", "--launch-grid=-1,0,1", "--link",
                       "default", "--frames", "50", "--seed", "0")
    rows = table(out)
    assert code == 0 and [r["launch_dbm"] for r in rows] == ["-1", "0", "1"]
    snr = [float(r["snr_db"]) for r in rows]
    assert snr[1] > snr[0] and snr[1] > snr[2]
    bad = tmp_path / "bad.json"
    bad.write_text('{"ase_power": -1, "eta0": 1, "eta1": 0}')
    code, _, err = run(capsys, "fer", "--mode", "shaped", "--launch-grid", "0", "--link",
                       str(bad), "--frames", "5")
    assert code == 1 and "ase_power" in err
    code, _, _ = run(capsys, "fer", "--mode", "shaped", "--launch-grid", "0", "--frames", "5")
    assert code == 1


def test_fer_kess_design(capsys):
    code, out, _ = run(capsys, "fer", "--mode", "shaped", "--kmax", "min", "--snr-grid", "40",
                       "--frames", "20")
    assert code == 0 and '"k_max": 16556' in out


def test_calibrate(capsys, tmp_path):
    path = tmp_path / "link.json"
    code, out, _ = run(capsys, "calibrate", "--write", str(path))
    rows = {r["scheme"]: r for r in table(out)}
    assert code == 0 and set(json.loads(path.read_text())) == {"ase_power", "eta0", "eta1", "mu4_ref"}
    assert float(rows["uniform"]["snr_opt_db"]) > float(rows["klss_min"]["snr_opt_db"]) > float(rows["ess"]["snr_opt_db"])


def test_wilson():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0.03 < hi < 0.04
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_out_file(capsys, tmp_path):
    path = tmp_path / "r.csv"
    code, out, _ = run(capsys, "stats", "--n", "4", "--emax", "12", "--out", str(path))
    assert code == 0 and out == "" and path.read_text().startswith("# command: stats")
