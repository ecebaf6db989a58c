"""The `hottc` command line: exit codes, report formats, imports."""

import json
import os
import subprocess
import sys

import pytest

from conftest import MANIFEST, PRELUDE, ROOT


def hottc(*args, cwd=None, env=None):
    e = dict(os.environ)
    e.pop("HOTTC_PATH", None)
    e.update(env or {})
    return subprocess.run([sys.executable, "-m", "hottc.cli", *map(str, args)], capture_output=True,
                          text=True, cwd=cwd or ROOT, env=e, timeout=300)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_ok_file_exits_zero():
    r = hottc("check", PRELUDE / "init" / "nat.htt")
    assert r.returncode == 0
    assert "0 errors" in r.stdout


def test_type_error_exits_one(tmp_path):
    f = write(tmp_path, "bad.htt", "axiom A : Type\naxiom a : A\ndefinition b : A → A := a\n")
    r = hottc("check", f)
    assert r.returncode == 1
    assert "bad.htt:3:" in r.stdout and "type error" in r.stdout


def test_parse_error_exits_two(tmp_path):
    f = write(tmp_path, "bad.htt", "definition := \n")
    r = hottc("check", f)
    assert r.returncode == 2
    assert "parse error" in r.stdout


def test_missing_file_exits_three(tmp_path):
    r = hottc("check", tmp_path / "nope.htt")
    assert r.returncode == 3


def test_missing_import_exits_three(tmp_path):
    f = write(tmp_path, "a.htt", 'import "nowhere"\n')
    r = hottc("check", f)
    assert r.returncode == 3 and "cannot find module" in r.stdout


def test_import_cycle_detected(tmp_path):
    write(tmp_path, "a.htt", 'import "b"\naxiom x : Type\n')
    write(tmp_path, "b.htt", 'import "a"\naxiom y : Type\n')
    r = hottc("check", tmp_path / "a.htt")
    assert r.returncode == 3
    assert "import cycle" in r.stdout


def test_failed_directive_exits_one(tmp_path):
    f = write(tmp_path, "d.htt", 'import "init/nat"\n#defeq (succ zero) zero\n')
    r = hottc("check", f, "--path", PRELUDE)
    assert r.returncode == 1 and "#defeq failed" in r.stdout


def test_search_path_from_environment(tmp_path):
    f = write(tmp_path, "d.htt", 'import "init/nat"\n#defeq (nat.add (succ zero) zero) (succ zero)\n')
    assert hottc("check", f).returncode == 3
    assert hottc("check", f, env={"HOTTC_PATH": str(PRELUDE)}).returncode == 0


def test_stable_output_is_byte_identical():
    a = hottc("check", "--manifest", MANIFEST, "--stable-output")
    b = hottc("check", "--manifest", MANIFEST, "--stable-output")
    assert a.returncode == 0
    assert a.stdout == b.stdout
    assert "s\n" not in a.stdout.splitlines()[-1]


def test_json_report():
    r = hottc("check", PRELUDE / "init" / "axioms.htt", "--json", "--stable-output")
    doc = json.loads(r.stdout)
    assert doc["ok"] and doc["exit_code"] == 0 and "time" not in doc
    last = doc["files"][-1]
    assert last["path"].endswith("axioms.htt")
    assert "eq_of_equiv" in last["declaration_names"]


def test_axioms_of_funext_from_ua():
    r = hottc("axioms", PRELUDE / "init" / "funext_from_ua.htt", "funext_from_ua")
    assert r.returncode == 0
    # [PAPER] function extensionality follows from univalence alone
    assert r.stdout == "ua\n"


def test_axioms_unknown_constant():
    r = hottc("axioms", PRELUDE / "init" / "nat.htt", "no.such")
    assert r.returncode == 1


def test_norm():
    r = hottc("norm", PRELUDE / "init" / "nat.htt", "nat.double (succ (succ zero))")
    assert r.returncode == 0
    # [TRIVIAL]
    assert r.stdout.strip() == "succ (succ (succ (succ zero)))"


def test_norm_parse_error():
    r = hottc("norm", PRELUDE / "init" / "nat.htt", "nat.double (")
    assert r.returncode == 2


def test_max_class_depth_flag():
    r = hottc("check", PRELUDE / "init" / "instances.htt", "--max-class-depth", "2")
    assert r.returncode == 1
    assert "InstanceDepthError" in r.stdout


def test_fuel_flag(tmp_path):
    f = write(tmp_path, "f.htt", 'import "init/nat"\n'
              "#defeq (nat.mul (succ (succ (succ zero))) (succ (succ (succ zero)))) "
              "(nat.mul (succ (succ (succ zero))) (succ (succ (succ zero))))\n"
              "#normalize nat.mul (succ (succ (succ (succ zero)))) (succ (succ (succ (succ zero))))\n")
    assert hottc("check", f, "--path", PRELUDE).returncode == 0
    r = hottc("check", f, "--path", PRELUDE, "--fuel", "20")
    assert r.returncode == 1
