import csv
import json

import pytest

from common.stats import VerdictStatus
from comparison import ConditionId
from conftest import project_root
from experiments import (
    VALID_MODULES,
    CheckContext,
    CheckSpec,
    build_bundle,
    dump_experiment,
    format_cell,
    get_registry_stats,
    list_checks,
    load_experiment,
    parse_experiment,
    run_audit,
    run_check,
    run_suite,
    simulate_to_csv,
)
from experiments.runner import VERDICT_COLUMNS

BUNDLED = project_root() / "config" / "experiments"

FLAT_SUITE = """
[experiment]
id = flat_smoke
seed = 11

[manifold]
kind = euclidean
dim = 2

[dimension]
m = 2

[target]
kind = euclidean
dim = 1

[check:curvature_sampling]
n_samples = 200

[check:comparison_equality]
radii = 0.5, 2

[check:condition_audit]
expect_hold = B1, B3
n_directions = 4
n_curvature_samples = 100

[check:a_implies_b]

[check:hilbert_trace]
n_trials = 50

[check:solver_convergence]
boundary = x_2/|x|
radius = 1
spacings = 0.5, 0.25
reference = x_2

[check:sde_second_moment]
n_paths = 500
"""

DETERMINISTIC = [
    "curvature_sampling",
    "comparison_equality",
    "condition_audit",
    "a_implies_b",
    "hilbert_trace",
    "solver_convergence",
]


@pytest.fixture(scope="module")
def flat_config():
    return parse_experiment(FLAT_SUITE)


# ==================== 注册表 ====================


def test_registry_covers_every_module():
    stats = get_registry_stats()
    assert stats["registered_checks"] >= 18
    assert set(stats["per_module"]) == set(VALID_MODULES)


def test_list_checks_module_filter():
    entries = list_checks("diffusion")
    assert entries
    assert all(e.module == "diffusion" for e in entries)
    assert [e.check_id for e in entries] == sorted(e.check_id for e in entries)
    assert list_checks("no_such_module") == []


def test_every_check_has_an_anchor():
    for entry in list_checks():
        assert entry.anchor.strip()
        assert entry.description


# ==================== 套件 ====================


def test_suite_on_flat_plane(flat_config, tmp_path):
    result = run_suite(flat_config, out_dir=tmp_path)
    by_id = {v.check_id: v for v in result.verdicts}
    assert [v.check_id for v in result.verdicts] == [c.check_id for c in flat_config.checks]
    for check_id in DETERMINISTIC:
        assert by_id[check_id].status == VerdictStatus.PASS, by_id[check_id].note
    assert by_id["sde_second_moment"].stderr > 0

    with (tmp_path / "flat_smoke_verdicts.csv").open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == VERDICT_COLUMNS
    assert [r[0] for r in rows[1:]] == sorted(by_id)

    summary = json.loads((tmp_path / "flat_smoke_summary.json").read_text(encoding="utf-8"))
    assert summary["seed"] == 11
    assert summary["exit_code"] == result.exit_code
    assert (tmp_path / "flat_smoke_solver_convergence.csv").exists()


def test_only_filter_and_exit_code(flat_config):
    result = run_suite(flat_config, write=False, only=DETERMINISTIC[:3])
    assert [v.check_id for v in result.verdicts] == DETERMINISTIC[:3]
    assert result.exit_code == 0
    assert result.counts() == {"pass": 3}


def test_reruns_are_byte_identical(flat_config, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    run_suite(flat_config, out_dir=first)
    run_suite(flat_config, out_dir=second)
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_seed_changes_monte_carlo_results(flat_config):
    other = flat_config.model_copy(update={"seed": 12})
    a = run_suite(flat_config, write=False, only=["sde_second_moment"]).verdicts[0]
    b = run_suite(other, write=False, only=["sde_second_moment"]).verdicts[0]
    assert a.lhs != b.lhs


def test_check_seeds_are_derived_per_check(flat_config):
    ctx = CheckContext(config=flat_config, bundle=build_bundle(flat_config))
    assert ctx.seed_for("kendall") == ctx.seed_for("kendall")
    assert ctx.seed_for("kendall") != ctx.seed_for("generator")
    assert 0 <= ctx.seed_for("kendall") < 2**63


def test_audit_witness_feeds_later_checks(flat_config):
    ctx = CheckContext(config=flat_config, bundle=build_bundle(flat_config))
    verdict, _ = run_check(ctx, CheckSpec(check_id="moment_bound", params={"n_paths": "10", "t_grid": "0.5"}))
    assert verdict.status == VerdictStatus.FAIL
    assert verdict.error["type"] == "precondition"

    run_check(ctx, CheckSpec(check_id="condition_audit", params={"n_directions": "4"}))
    assert ctx.state["audit"][ConditionId.B3].holds
    verdict, rows = run_check(
        ctx, CheckSpec(check_id="moment_bound", params={"n_paths": "200", "t_grid": "0.5", "dt": "0.05"})
    )
    assert verdict.error is None
    assert rows


def test_heavily_censored_recurrence_check_is_low_power(flat_config):
    ctx = CheckContext(config=flat_config, bundle=build_bundle(flat_config))
    params = {"n_paths": "200", "a": "1", "b": "16", "r_start": "2", "dt": "0.01", "step_budget": "20"}
    verdict, rows = run_check(ctx, CheckSpec(check_id="recurrence_probe", params=params))
    assert verdict.status == VerdictStatus.LOW_POWER
    assert rows[0]["censored"] > 0.5


def test_failing_precondition_is_recorded_not_raised():
    config = parse_experiment(
        "[experiment]\nid = drifted\nseed = 1\n\n"
        "[manifold]\nkind = euclidean\ndim = 2\n\n"
        "[drift]\nconstant = 1, 0\n\n"
        "[dimension]\nm = 2\n\n"
        "[check:comparison_equality]\nradii = 1\n"
    )
    result = run_suite(config, write=False)
    (verdict,) = result.verdicts
    assert verdict.status == VerdictStatus.FAIL
    assert verdict.error["type"] == "precondition"
    assert result.exit_code == 1


def test_negative_control_fails():
    # Ric_V = Hess f = −2 g
    config = parse_experiment(
        "[experiment]\nid = concave\nseed = 3\n\n"
        "[manifold]\nkind = euclidean\ndim = 2\n\n"
        "[drift]\npotential = -|x|^2\n\n"
        "[check:curvature_sampling]\nn_samples = 50\n"
    )
    (verdict,) = run_suite(config, write=False).verdicts
    assert verdict.status == VerdictStatus.FAIL
    assert verdict.margin == pytest.approx(-2.0, rel=1e-6)


def test_unexpected_condition_fails_the_audit():
    config = parse_experiment(
        (BUNDLED / "example1_m0.ini").read_text(encoding="utf-8").replace(
            "expect_hold = A1, A1*, B1, B3", "expect_hold = A2"
        )
    )
    result = run_suite(config, write=False, only=["condition_audit"])
    assert result.verdicts[0].status == VerdictStatus.FAIL
    assert "A2" in result.verdicts[0].note


def test_liouville_mechanism_checks_pass_on_baseline():
    config = load_experiment(BUNDLED / "euclidean_baseline.ini")
    mechanisms = [
        "gradient_estimate",
        "growth_classification",
        "liouville_lower_bound",
        "gauge_convexity",
        "submartingale_phi",
    ]
    result = run_suite(config, write=False, only=mechanisms)
    by_id = {v.check_id: v for v in result.verdicts}
    assert sorted(by_id) == sorted(mechanisms)
    for check_id in mechanisms:
        assert by_id[check_id].status == VerdictStatus.PASS, by_id[check_id].note


def test_example_one_decay_and_perturbed_submartingale():
    config = load_experiment(BUNDLED / "example1_m0.ini")
    result = run_suite(config, write=False, only=["liouville_decay", "submartingale_phi"])
    by_id = {v.check_id: v for v in result.verdicts}
    assert by_id["liouville_decay"].status == VerdictStatus.PASS, by_id["liouville_decay"].note
    perturbed = by_id["submartingale_phi"]
    assert perturbed.status == VerdictStatus.PASS
    assert "underlying status fail" in perturbed.note


# ==================== 随包配置与回写 ====================


@pytest.mark.parametrize("path", sorted(BUNDLED.glob("*.ini")), ids=lambda p: p.stem)
def test_bundled_experiments_load(path):
    config = load_experiment(path)
    assert config.experiment_id == path.stem
    assert config.checks


@pytest.mark.parametrize("path", sorted(BUNDLED.glob("*.ini")), ids=lambda p: p.stem)
def test_dump_then_load_preserves_config(path, tmp_path):
    config = load_experiment(path)
    out = tmp_path / path.name
    dump_experiment(config, out)
    assert load_experiment(out).model_dump() == config.model_dump()


def test_run_audit_writes_rows(tmp_path):
    reports = run_audit(BUNDLED / "example1_m0.ini", out_dir=tmp_path)
    by_id = {r.condition_id: r for r in reports}
    assert by_id[ConditionId.B3].holds
    assert not by_id[ConditionId.A2].holds
    assert (tmp_path / "example1_m0_audit.csv").exists()


def test_simulate_to_csv(tmp_path):
    out = simulate_to_csv(BUNDLED / "euclidean_baseline.ini", 5, 0.05, 7, tmp_path / "paths.csv", n_observe=4)
    with out.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "path", "r", "x_1", "x_2", "exited"]
    assert len(rows) == 5 * 5
    assert {r["exited"] for r in rows} == {"false"}
    assert float(rows[0]["t"]) == 0.0 and float(rows[0]["r"]) == 0.0


@pytest.mark.parametrize(
    "value, text",
    [
        (None, ""),
        (True, "true"),
        (0.1, "0.1"),
        (float("inf"), "inf"),
        ([1.0, 2], "1.0 2"),
        (VerdictStatus.LOW_POWER, "low-power"),
        ({"b": 1, "a": 2}, '{"a": 2, "b": 1}'),
    ],
)
def test_format_cell(value, text):
    assert format_cell(value) == text


# ==================== 命令行 ====================


def test_cli_list_and_bad_config(tmp_path):
    from main import main

    assert main(["list", "--module", "bochner"]) == 0
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nid = x\n\n[manifold]\nkind = euclidean\ndim = 2\n", encoding="utf-8")
    assert main(["run", str(bad)]) == 2


def test_bare_name_resolves_to_bundled_experiment():
    assert load_experiment("hyperbolic_baseline").experiment_id == "hyperbolic_baseline"


def test_readme_indexes_every_check():
    text = (project_root() / "README.md").read_text(encoding="utf-8")
    for entry in list_checks():
        assert f"`{entry.check_id}`" in text
        assert entry.anchor.replace("|", "\\|") in text
