import csv
import shutil
import textwrap

import pytest

from holowidth.cli import bundled_config, main
from holowidth.config import ConfigError, load_config, parse_config

SMALL = textwrap.dedent("""\
    seed: 11
    problem:
      kind: affine
      grid: {m: 1, N: 63}
      load: const1
      directions: {family: bumps, s: 3.0, c: 0.5, J: 5}
    studies:
      taylor: {max_degree: 3, n_terms: 20}
      bounds: {degree_cap: 6}
      widths: {sampler: uniform, m: 40, n_max: 12, window: [2, 8]}
      cover: {epsilon: 1.0, J_cap: 3, samples: 20}
    """)


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_bundled_configs_validate():
    for name in ("affine_s3", "affine_smooth8", "semilinear_2d"):
        cfg = load_config(bundled_config(name))
        assert cfg.seed is not None


def test_unknown_key_line_anchored(tmp_path, capsys):
    text = SMALL.replace("  load: const1\n", "  load: const1\n  foo: 3\n")
    p = _write(tmp_path, text)
    with pytest.raises(ConfigError, match=r"cfg.yaml:6: unknown key 'foo'"):
        load_config(p)
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "'foo'" in capsys.readouterr().err


def test_seed_required_for_randomized(tmp_path):
    p = _write(tmp_path, SMALL.replace("seed: 11\n", ""))
    assert main(["widths", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_type_error_reports_line():
    with pytest.raises(ConfigError, match=r":3: problem.grid.N"):
        parse_config("seed: 1\nproblem:\n  grid: {m: 1, N: one}\n  directions: {family: constant, values: [0.1]}\n"
                     "studies: {}\n")


def test_run_small_config(tmp_path):
    p = _write(tmp_path, SMALL)
    out = tmp_path / "run"
    assert main(["run", "--config", str(p), "--out", str(out)]) == 0
    for rel in ("config.echo", "manifest", "taylor/taylor.csv", "bounds/bounds.csv", "widths/widths.csv",
                "cover/covering.txt", "widths/summary.yaml"):
        assert (out / rel).is_file(), rel
    with open(out / "bounds" / "bounds.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and max(int(r["degree"]) for r in rows) == 6
    assert all(r["violation"] == "0" for r in rows)
    with open(out / "widths" / "widths.csv") as fh:
        assert fh.readline().strip() == "n,svd_rms,greedy_max"
    assert "rate_transfer" in (out / "widths" / "summary.yaml").read_text()


def test_determinism_and_threads(tmp_path):
    p = _write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(p), "--out", str(a)]) == 0
    assert main(["run", "--config", str(p), "--out", str(b), "--threads", "3"]) == 0
    assert (a / "manifest").read_bytes() == (b / "manifest").read_bytes()


def test_cover_over_cap_refuses(tmp_path, capsys):
    p = _write(tmp_path, SMALL.replace("epsilon: 1.0, J_cap: 3", "epsilon: 0.2, J_cap: 3"))
    out = tmp_path / "o"
    assert main(["cover", "--config", str(p), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "predicted net size" in err
    assert (out / "FAILED").is_file() and (out / "manifest").is_file()


def test_report(tmp_path, capsys):
    assert main(["report"]) == 1
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", str(empty)]) == 1
    p = _write(tmp_path, SMALL)
    out = tmp_path / "r"
    assert main(["taylor", "--config", str(p), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "run,study,key,value" and any(",taylor," in line for line in lines[1:])


def test_seed_override_changes_output(tmp_path):
    p = _write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["widths", "--config", str(p), "--out", str(a)]) == 0
    assert main(["widths", "--config", str(p), "--out", str(b), "--seed", "12"]) == 0
    assert (a / "manifest").read_bytes() != (b / "manifest").read_bytes()


def test_bundled_name_resolves(tmp_path):
    # a copied bundled config runs by path as well as by name
    src = bundled_config("affine_s3")
    dst = tmp_path / "copy.yaml"
    shutil.copy(src, dst)
    assert load_config(dst) == load_config(src)
