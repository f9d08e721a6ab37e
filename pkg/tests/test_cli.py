"""Command-line surface: exit codes, output formats, seeding."""

import dataclasses
import json
from pathlib import Path

import pytest

from deltaforge.cli import (
    DEFAULT_SEED,
    EXIT_CHECK_FAILED,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    main,
)
from deltaforge.rewrite import CATALOG
from deltaforge.scripts import load_script_text

from conftest import mutate_step

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# run configuration


def test_config_defaults():
    cfg = RunConfig()
    assert cfg.hbar == 1.0 and cfg.tol == 1e-10
    assert cfg.seed == DEFAULT_SEED
    assert cfg.sweep is None and cfg.family == "gaussian"


def test_config_is_frozen():
    cfg = RunConfig()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.hbar = 2.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"hbar": 0.0},
        {"hbar": -1.0},
        {"tol": 0.0},
        {"sweep": (1e-2, 1e-1)},  # must shrink
        {"sweep": (1e-1, 1e-1)},
        {"sweep": (1e-1, -1e-2)},
        {"output": "yaml"},
        {"family": "sinc"},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        RunConfig(**kwargs)


# ---------------------------------------------------------------------------
# exit codes


def test_simplify_ok(capsys):
    code, out, _ = run(capsys, ["simplify", "x*ddelta(x, 1)"])
    assert code == EXIT_OK
    assert out.splitlines()[0] == "-delta(x)"
    assert "scale-deriv" in out


def test_simplify_trace_lines(capsys):
    code, out, _ = run(capsys, ["simplify", "x^2*ddelta(x, 1)"])
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "0"
    assert lines[1].lstrip().startswith("1. ")
    assert "->" in lines[1]


def test_verify_bundled_by_name(capsys):
    code, out, _ = run(capsys, ["verify", "commutator"])
    assert code == EXIT_OK
    assert out.strip() == "VERIFIED (8 steps): commutator.dv"


def test_verify_all(capsys):
    code, out, _ = run(capsys, ["verify", "--all"])
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert len(lines) == 4
    assert all(line.startswith("VERIFIED") for line in lines)


def test_verify_broken_script_fails(capsys, tmp_path):
    bad = tmp_path / "broken.dv"
    bad.write_text(mutate_step(load_script_text("commutator"), 8))
    code, out, _ = run(capsys, ["verify", str(bad)])
    assert code == EXIT_CHECK_FAILED
    assert "FAILED at step 8" in out


def test_parse_error_is_usage(capsys):
    code, _, err = run(capsys, ["simplify", "x + "])
    assert code == EXIT_USAGE
    assert "parse error" in err


def test_missing_script_is_usage(capsys):
    code, _, err = run(capsys, ["verify", "no-such-script"])
    assert code == EXIT_USAGE
    assert "no such script" in err


def test_verify_without_targets_is_usage(capsys):
    code, _, err = run(capsys, ["verify"])
    assert code == EXIT_USAGE
    assert "error" in err


def test_increasing_sweep_is_usage(capsys):
    code, _, err = run(capsys, ["numcheck", "scale-deriv", "--eps", "0.01", "--eps", "0.1"])
    assert code == EXIT_USAGE
    assert "decreasing" in err


def test_nonpositive_hbar_is_usage(capsys):
    code, _, err = run(capsys, ["simplify", "x", "--hbar", "-2"])
    assert code == EXIT_USAGE
    assert "hbar" in err


def test_undefined_product_is_internal(capsys):
    # delta(x)*delta(2*x) has no value in the calculus; that is an engine
    # condition, not a usage mistake.
    code, _, err = run(capsys, ["simplify", "delta(x)*delta(2*x)"])
    assert code == EXIT_INTERNAL
    assert "engine error" in err


def test_no_subcommand_exits_2():
    with pytest.raises(SystemExit) as si:
        main([])
    assert si.value.code == 2


# ---------------------------------------------------------------------------
# structured output


def test_structured_simplify_schema(capsys):
    code, out, _ = run(capsys, ["simplify", "x*ddelta(x, 1)", "--output", "structured"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert set(doc) == {"command", "input", "result", "steps", "status"}
    assert doc["result"] == "-delta(x)"
    assert doc["steps"][0]["rule"] == "scale-deriv"
    assert set(doc["steps"][0]) == {"rule", "path", "before", "after"}


def test_structured_verify_matches_golden(capsys):
    code, out, _ = run(capsys, ["verify", "commutator", "--output", "structured"])
    assert code == EXIT_OK
    assert json.loads(out) == json.loads((GOLDEN / "verify_commutator.json").read_text())


def test_rules_listing(capsys):
    code, out, _ = run(capsys, ["rules"])
    assert code == EXIT_OK
    for rule in CATALOG:
        assert rule.id in out
    assert "pattern:" in out and "guard:" in out and "citation:" in out


def test_structured_rules_fields(capsys):
    code, out, _ = run(capsys, ["rules", "--output", "structured"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["command"] == "rules"
    assert len(doc["rules"]) == len(CATALOG)
    for entry in doc["rules"]:
        assert set(entry) == {"id", "pattern", "replacement", "guard", "citation", "weight"}


def test_structured_numcheck_rule(capsys):
    code, out, _ = run(
        capsys,
        ["numcheck", "scale-deriv", "--eps", "0.1", "--eps", "0.01", "--eps", "0.001",
         "--output", "structured"],
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["status"] == "ok"
    rep = doc["checks"][0]
    assert rep["rule_id"] == "scale-deriv"
    assert rep["passed"] is True
    assert [row["epsilon"] for row in rep["rows"]] == [0.1, 0.01, 0.001]


def test_numcheck_diffraction(capsys):
    code, out, _ = run(capsys, ["numcheck", "diffraction", "--alpha", "0", "--beta", "1"])
    assert code == EXIT_OK
    assert "PASSED" in out


# ---------------------------------------------------------------------------
# seeding


_SAMPLED = ["numcheck", "scale-deriv", "--eps", "0.1", "--eps", "0.01", "--eps", "0.001",
            "--samples", "2", "--output", "structured"]


def test_seed_env_and_flag(capsys, monkeypatch):
    monkeypatch.setenv("DELTA_FORGE_SEED", "31")
    _, out_env, _ = run(capsys, _SAMPLED)
    _, out_env2, _ = run(capsys, _SAMPLED)
    assert out_env == out_env2  # same seed, same draws

    monkeypatch.setenv("DELTA_FORGE_SEED", "99")
    _, out_flag, _ = run(capsys, _SAMPLED + ["--seed", "31"])
    assert out_flag == out_env  # the flag wins over the environment

    _, out_other, _ = run(capsys, _SAMPLED)
    assert out_other != out_env  # seed 99 draws differently
