import numpy as np
import pytest

from hpdg import parse_config
from hpdg.cases import builtin_case_linear, builtin_case_paper, fd_body_force, rectangle_normal
from hpdg.config import ConfigError, StudyConfig


def test_paper_case_values():
    c = builtin_case_paper()
    np.testing.assert_allclose(c.u(0.0, 0.0), [1.0, 1.0])
    for y in (-0.7, 0.0, 0.3):
        np.testing.assert_allclose(c.u(np.array([-1.0, 1.0]), y), 0.0, atol=1e-15)


def test_paper_forcing_matches_finite_differences():
    c = builtin_case_paper()
    pts = np.random.default_rng(0).uniform(-1, 1, size=(20, 2))
    for x, y in pts:
        np.testing.assert_allclose(c.f(x, y), fd_body_force(c, x, y), atol=1e-6)


def test_paper_gradient_matches_finite_differences():
    c = builtin_case_paper()
    h = 1e-6
    for x, y in np.random.default_rng(1).uniform(-1, 1, size=(5, 2)):
        fd = np.stack([(c.u(x + h, y) - c.u(x - h, y)) / (2 * h), (c.u(x, y + h) - c.u(x, y - h)) / (2 * h)], -1)
        np.testing.assert_allclose(c.grad(x, y), fd, atol=1e-8)


def test_linear_case_traction():
    c = builtin_case_linear()
    np.testing.assert_allclose(c.f(0.3, 0.2), 0.0)
    np.testing.assert_allclose(c.g_N(1.0, 0.2), [0.13, 0.0])
    np.testing.assert_allclose(rectangle_normal(c.domain, np.array([-1.0, 0.5]), np.array([0.0, 1.0])),
                               [[-1.0, 0.0], [0.0, 1.0]])


def test_defaults():
    cfg = parse_config("method = sipg\n")
    assert cfg == StudyConfig()
    assert cfg.superpenalty_d == 1 and cfg.alpha == -1
    for m in ("iipg", "nipg"):
        assert parse_config(f"method = {m}").superpenalty_d == 3
    assert parse_config("").method == "sipg"


def test_full_file_with_comments():
    cfg = parse_config("""
        # study
        method = NIPG   # case-insensitive
        degree = 2
        levels = 2, 3,4
        beta = 50
        gamma = 10
        superpenalty_d = 1
        lambda = 1.0
        mu = 0.5
        case = linear
        tol = 1e-9
        out_dir = results
    """)
    assert (cfg.method, cfg.degree, cfg.levels, cfg.beta, cfg.gamma) == ("nipg", 2, (2, 3, 4), 50.0, 10.0)
    assert cfg.superpenalty_d == 1 and cfg.material.lame_mu == 0.5 and cfg.out_dir == "results"
    assert dict(cfg.echo())["gamma"] == "10.0"


@pytest.mark.parametrize("text, key, line", [
    ("alpha = 1", "alpha", 1),
    ("method = sipg\nfoo = 3", "foo", 2),
    ("degree = two", "degree", 1),
    ("degree = 9", "degree", None),
    ("levels = 3, 2", "levels", 1),
    ("levels = 0, 1", "levels", 1),
    ("beta = -1", "beta", 1),
    ("gamma = -0.5", "gamma", 1),
    ("mu = 0", "mu", 1),
    ("case = other", "case", 1),
    ("tol = 2", "tol", 1),
    ("beta = nan", "beta", 1),
    ("method = dg", "method", 1),
])
def test_errors_name_key(text, key, line):
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    assert ei.value.key == key
    if line is not None:
        assert ei.value.line == line
    assert repr(key) in str(ei.value)


def test_malformed_line():
    with pytest.raises(ConfigError) as ei:
        parse_config("method = sipg\njust words")
    assert ei.value.line == 2


def test_alpha_hint():
    with pytest.raises(ConfigError, match="method"):
        parse_config("alpha = -1")


def test_overrides_win():
    cfg = parse_config("method = sipg\ngamma = 1", {"gamma": 7.0, "method": "iipg"})
    assert cfg.gamma == 7.0 and cfg.method == "iipg" and cfg.superpenalty_d == 3


def test_sipg_superpenalty_warns():
    with pytest.warns(UserWarning):
        parse_config("method = sipg\nsuperpenalty_d = 3")
