import pytest
from hypothesis import given, settings, strategies as st

from fhn_levy.config import ExperimentConfig, defaults_text, parse_config, serialize
from fhn_levy.errors import ConfigError


def test_empty_is_defaults():
    assert parse_config("") == ExperimentConfig()
    assert parse_config("# only a comment\n") == ExperimentConfig()


def test_defaults_text_parses():
    assert parse_config(defaults_text()) == ExperimentConfig()


def test_alpha_out_of_range():
    with pytest.raises(ConfigError, match=r"line 2: .*alpha.*\(1, 2\)"):
        parse_config("[noise]\nalpha = 2.5\n")


def test_round_trip():
    text = "[system]\nlambda = 0.5  # inline\nvarpi = 2\n[noise]\nseeds = 3, 9, 27\nepsilons = 0.2 0.05 0.1\n"
    cfg = parse_config(text)
    assert cfg.lam == 0.5 and cfg.seeds == (3, 9, 27) and cfg.epsilons == (0.2, 0.05, 0.1)
    again = parse_config(serialize(cfg))
    assert again == cfg and serialize(again) == serialize(cfg)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.01, 10), st.floats(1.01, 1.99),
    st.lists(st.floats(0, 1), min_size=0, max_size=4),
    st.lists(st.integers(0, 10**6), min_size=1, max_size=5),
)
def test_round_trip_property(lam, alpha, eps, seeds):
    cfg = ExperimentConfig(lam=lam, alpha=alpha, epsilons=tuple(eps), seeds=tuple(seeds))
    assert parse_config(serialize(cfg)) == cfg


@pytest.mark.parametrize(
    "text,pattern",
    [
        ("[noise]\nbogus = 1\n", r"line 2: unknown key 'bogus'"),
        ("[nowhere]\nx = 1\n", r"line 1: unknown section"),
        ("[lattice]\nI = sixty\n", r"line 2: .*expected int"),
        ("[system]\nrho = 0\n", r"rho: must be > 0"),
        ("[system]\nlambda = -1\n", r"lambda: must be > 0"),
        ("[solver]\ndt = 0.003\n", r"must divide the noise grid step"),
        ("[lattice]\nI = 16\n", r"tail index 2N must be < I"),
        ("[solver]\nt_span = 0, 0.005\n", r"noise grid"),
        ("[noise]\nseeds =\n", r"at least one seed"),
        ("no header\n", r"malformed"),
    ],
)
def test_rejections(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


def test_digest_depends_on_content():
    a = ExperimentConfig()
    assert a.digest() == ExperimentConfig().digest()
    assert a.digest() != a.with_seeds([1]).digest()
