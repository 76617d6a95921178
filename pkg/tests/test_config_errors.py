import pytest

from common.errors import ConfigValidationError
from experiments import load_experiment, parse_experiment

HEADER = """[experiment]
id = probe
seed = 5

[manifold]
kind = euclidean
dim = 2
"""


def parse_error(text: str) -> ConfigValidationError:
    with pytest.raises(ConfigValidationError) as info:
        parse_experiment(text)
    return info.value


def test_valid_header_parses():
    config = parse_experiment(HEADER)
    assert config.experiment_id == "probe"
    assert config.seed == 5
    assert config.m == "+inf"
    assert config.drift.potential is None
    assert config.checks == []


def test_missing_seed_points_at_experiment_section():
    err = parse_error(HEADER.replace("seed = 5\n", ""))
    assert err.field == "seed"
    assert err.line == 1
    assert "line 1" in err.message


def test_negative_seed_points_at_its_line():
    err = parse_error(HEADER.replace("seed = 5", "seed = -5"))
    assert err.field == "seed"
    assert err.line == 3


def test_unknown_experiment_key():
    err = parse_error(HEADER.replace("seed = 5", "seed = 5\ncolour = red"))
    assert err.field == "colour"
    assert err.line == 4


def test_unknown_section():
    err = parse_error(HEADER + "\n[plots]\nstyle = dark\n")
    assert err.field == "plots"
    assert err.line == 9


def test_missing_manifold_section():
    err = parse_error("[experiment]\nid = x\nseed = 1\n")
    assert err.field == "manifold"


def test_unknown_check_reports_its_header_line():
    err = parse_error(HEADER + "\n[check:does_not_exist]\nn_paths = 10\n")
    assert err.line == 9
    assert "does_not_exist" in err.message


def test_missing_required_parameter():
    err = parse_error(HEADER + "\n[check:sde_second_moment]\nt = 1\n")
    assert err.field == "n_paths"
    assert err.line == 9


def test_bad_parameter_value_reports_its_line():
    err = parse_error(HEADER + "\n[check:sde_second_moment]\nn_paths = 100\ndt = -0.1\n")
    assert err.field == "dt"
    assert err.line == 11


def test_unknown_parameter():
    err = parse_error(HEADER + "\n[check:sde_second_moment]\nn_paths = 100\nwobble = 3\n")
    assert err.field == "wobble"
    assert err.line == 11


def test_bad_list_entry():
    err = parse_error(HEADER + "\n[check:kendall]\nn_paths = 10\nx0 = 1, 0\nt_grid = 0.5, soon\n")
    assert err.field == "t_grid"
    assert err.line == 12


def test_lyapunov_rejects_growth_conditions():
    err = parse_error(HEADER + "\n[check:lyapunov]\nn_paths = 10\nconditions = A1\n")
    assert err.field == "conditions"


def test_bad_effective_dimension():
    err = parse_error(HEADER + "\n[dimension]\nm = 1.5\n")
    assert err.field == "m"
    assert err.line == 10


def test_bad_manifold_kind():
    err = parse_error(HEADER.replace("kind = euclidean", "kind = torus"))
    assert err.field == "kind"
    assert err.line == 6


def test_drift_with_wrong_dimension():
    err = parse_error(HEADER + "\n[drift]\nconstant = 1, 2, 3\n")
    assert err.field == "constant"
    assert err.line == 10


def test_duplicate_key():
    err = parse_error(HEADER.replace("dim = 2", "dim = 2\ndim = 3"))
    assert err.field == "dim"
    assert err.line == 8


def test_content_before_first_section():
    err = parse_error("id = x\n" + HEADER)
    assert err.line == 1
    assert "section header" in err.message


def test_malformed_line():
    err = parse_error(HEADER + "\nnot a key\n")
    assert err.line == 9
    assert "malformed" in err.message


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigValidationError) as info:
        load_experiment(tmp_path / "missing.ini")
    assert info.value.field == "path"
