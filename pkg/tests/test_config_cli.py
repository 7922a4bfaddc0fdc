import csv
import hashlib
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from cmvlab.cli import main, to_csv
from cmvlab.config import ConfigError, build_sampling, build_system, parse_config
from cmvlab.dynamics import LocallyConstantSampling, SubstitutionSubshift, TorusRotation

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """\
[experiment]
name = t
seed = 3

[system]
type = iid
alphabet = a, b

[sampling]
type = locally_constant
table = a:0.3, b:-0.3

[params]
n = 40
samples = 2
bins = 16
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run_cli(tmp_path, command, config, *extra):
    return main([command, "--config", str(config), "--out", str(tmp_path), *extra])


# -- config parsing ---------------------------------------------------------


def test_parse_ok():
    cfg = parse_config(BASE, "dos")
    assert cfg.name == "t" and cfg.seed == 3
    assert cfg.params == {"n": 40, "samples": 2, "bins": 16}
    assert cfg.sampling["table"] == {"a": 0.3, "b": -0.3}
    assert parse_config(BASE, "dos", seed=11).seed == 11
    assert len(cfg.digest) == 64


@pytest.mark.parametrize("bad,line,fragment", [
    (BASE.replace("bins = 16", "bins = -4"), 16, "positive"),
    (BASE.replace("bins = 16", "binz = 16"), 16, "unknown key"),
    (BASE.replace("n = 40", "n = forty"), 14, "bad value"),
    (BASE.replace("type = iid", "type = lattice"), 6, "unknown system type"),
    (BASE + "\n[extra]\nx = 1\n", 18, "unknown section"),
    (BASE.replace("seed = 3", "seed = -1"), 3, "non-negative"),
])
def test_parse_errors_with_lines(bad, line, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(bad, "dos")
    assert exc.value.line == line
    assert fragment in str(exc.value) and str(exc.value).startswith(f"line {line}:")


def test_parse_errors_other():
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("seed = 3\n", ""), "dos")
    with pytest.raises(ConfigError) as exc:
        parse_config("[params\nn = 1\n", "dos")
    assert exc.value.line is not None
    with pytest.raises(ConfigError):
        parse_config(BASE, "plot")
    with pytest.raises(ConfigError):
        parse_config(BASE, "scmap")


def test_builders():
    sub = build_system({"type": "subshift"})
    assert isinstance(sub, SubstitutionSubshift)
    custom = build_system({"type": "subshift", "rules": {"a": "ab", "b": "a"}, "seed_symbol": "a"})
    assert custom.word(8) == sub.word(8)
    rot = build_system({"type": "rotation", "angle": 0.3})
    assert isinstance(rot, TorusRotation)
    f = build_sampling({"type": "locally_constant", "table": {"a": 0.5, "b": -0.5}}, sub)
    assert isinstance(f, LocallyConstantSampling)
    with pytest.raises(ConfigError):
        build_sampling({"type": "rotation"}, sub)
    with pytest.raises(ConfigError):
        build_sampling({"type": "locally_constant"}, sub)


# -- CLI runs ---------------------------------------------------------------


def test_to_csv_format():
    text = to_csv(["a", "b"], [(1, 0.1), ("x,y", True)])
    assert text == 'a,b\n1,0.1\n"x,y",1\n'


def test_lyapunov_free(tmp_path):
    assert run_cli(tmp_path, "lyapunov", CONFIGS / "lyapunov_free.ini") == 0
    rows = read_csv(tmp_path / "lyapunov_free.csv")
    assert rows[0] == ["z_re", "z_im", "gamma", "stderr", "error"]
    for r in rows[1:]:
        z = complex(float(r[0]), float(r[1]))
        assert abs(float(r[2]) - math.log(max(abs(z), 1.0))) <= 1e-10
        if abs(abs(z) - 1) < 1e-12:
            assert float(r[2]) <= 1e-10
    meta = json.loads((tmp_path / "lyapunov_free.json").read_text())
    text = (CONFIGS / "lyapunov_free.ini").read_text()
    assert meta["config_sha256"] == hashlib.sha256(text.encode()).hexdigest()
    assert meta["seed"] == 1 and meta["versions"]["kernel_backend"] in ("cython", "python")
    assert meta["files"]["data"] == "lyapunov_free.csv"


def test_determinism(tmp_path):
    # shrunken copies of the shipped configs keep the test quick
    dos = tmp_path / "dos.ini"
    dos.write_text((CONFIGS / "dos_bernoulli.ini").read_text().replace("n = 1000", "n = 300").replace(
        "samples = 10", "samples = 3"))
    per = tmp_path / "per.ini"
    per.write_text((CONFIGS / "perturb_random.ini").read_text().replace("n = 50, 200", "n = 40, 60").replace(
        "trials = 20", "trials = 4"))
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli(out, "dos", dos, "--seed", "5") == 0
        assert run_cli(out, "perturb", per, "--seed", "5") == 0
    for name in ("dos_bernoulli.csv", "perturb_random.csv", "perturb_random.jsonl"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    run_cli(c, "dos", dos, "--seed", "6")
    assert (c / "dos_bernoulli.csv").read_bytes() != (a / "dos_bernoulli.csv").read_bytes()
    meta = json.loads((a / "dos_bernoulli.json").read_text())
    assert meta["seed"] == 5 and meta["results"]["rho_inf"] == pytest.approx(math.sqrt(1 - 0.09))


def test_thread_count_does_not_change_data(tmp_path):
    for t in ("1", "3"):
        assert run_cli(tmp_path / t, "lyapunov", CONFIGS / "lyapunov_free.ini", "--threads", t) == 0
    assert (tmp_path / "1" / "lyapunov_free.csv").read_bytes() == (tmp_path / "3" / "lyapunov_free.csv").read_bytes()


def test_scmap_endpoints(tmp_path):
    assert run_cli(tmp_path, "scmap", CONFIGS / "scmap.ini") == 0
    meta = json.loads((tmp_path / "scmap.json").read_text())
    ends = sorted((complex(*e) for e in meta["results"]["endpoints"]), key=lambda z: z.imag)
    assert abs(ends[0] - (-0.6 - 0.8j)) <= 1e-9 and abs(ends[1] - (-0.6 + 0.8j)) <= 1e-9
    assert meta["seed"] is None
    rows = read_csv(tmp_path / "scmap.csv")
    assert len(rows) == 1 + 1 + 128


def test_perturb_same_is_zero(tmp_path):
    assert run_cli(tmp_path, "perturb", CONFIGS / "perturb_same.ini") == 0
    rows = read_csv(tmp_path / "perturb_same.csv")
    assert len(rows) == 1 + 10
    for r in rows[1:]:
        assert [float(x) for x in r[2:6]] == [0.0, 0.0, 0.0, 0.0]
        assert r[6] == "1" and r[7] == ""
    recs = (tmp_path / "perturb_same.jsonl").read_text().splitlines()
    assert len(recs) == 10
    assert set(json.loads(recs[0])) == {"sup_distance", "op_norm", "bound", "hausdorff", "window"}


def test_assemble_and_boshernitzan(tmp_path):
    assert run_cli(tmp_path, "assemble", CONFIGS / "assemble.ini") == 0
    meta = json.loads((tmp_path / "assemble.json").read_text())
    assert meta["results"]["size"] == 6 and meta["results"]["unitarity_defect"] <= 1e-12
    assert run_cli(tmp_path, "boshernitzan", CONFIGS / "boshernitzan.ini") == 0
    rows = read_csv(tmp_path / "boshernitzan.csv")
    assert rows[1][0] == "1" and abs(float(rows[1][1]) - (3 - math.sqrt(5)) / 2) <= 1e-3
    assert all(float(r[1]) >= 0.2 for r in rows[1:])


def test_spectrum_small(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text((CONFIGS / "spectrum_fibonacci.ini").read_text().replace("n = 987", "n = 144"))
    assert run_cli(tmp_path, "spectrum", cfg) == 0
    meta = json.loads((tmp_path / "spectrum_fibonacci.json").read_text())
    assert 0 < meta["results"]["measure"] < 2 * math.pi


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text(BASE.replace("bins = 16", "bins = 0"))
    assert run_cli(tmp_path, "dos", bad) == 2
    assert "line 16" in capsys.readouterr().err
    assert run_cli(tmp_path, "dos", tmp_path / "missing.ini") == 2
    assert main(["dos", "--config", str(bad), "--threads", "0"]) == 2
    # every record fails: z on the unit circle violates the Thouless guard
    worse = tmp_path / "w.ini"
    worse.write_text(BASE.replace("n = 40\nsamples = 2\nbins = 16\n", "n_dos = 40\nn_cocycle = 1000\nz = 1, 1j\n"))
    assert run_cli(tmp_path, "thouless", worse) == 1
    meta = json.loads((tmp_path / "t.json").read_text())
    assert meta["failed_records"] == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "cmvlab", "scmap", "--config", str(CONFIGS / "scmap.ini"),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    assert (tmp_path / "scmap.csv").exists()
