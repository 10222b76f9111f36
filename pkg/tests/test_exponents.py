import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracpx.exponents import (
    ExponentFamily as F,
    ExponentField,
    ProblemConfig,
    candidate_balls,
    critical_exponent,
    find_A1_witness,
    find_A2_witness,
    smooth_bump,
    validate_conditions,
    validate_growth_G,
)
from fracpx.grid import build_grid

from conftest import UNIT


def field_for(p, q, r, s=0.25, resolution=32):
    cfg = ProblemConfig(dimension=1, s=s, omega=UNIT, p=p, q=q, r=r, resolution=resolution)
    grid = build_grid(cfg)
    return grid, ExponentField.sample(grid.coords, grid.omega_index, p, q, r)


def const_field(p, q, r, **kw):
    return field_for(F.constant(p), F.constant(q), F.constant(r), **kw)


# -- critical exponent -------------------------------------------------------


@pytest.mark.parametrize("p, s, n, expected", [(2.0, 0.25, 1, 4.0), (2.0, 0.5, 2, 4.0)])
def test_critical_exponent_values(p, s, n, expected):
    assert critical_exponent(p, s, n) == pytest.approx(expected, rel=1e-15)


def test_critical_exponent_rejects_sp_at_dimension():
    with pytest.raises(ValueError):
        critical_exponent(2.0, 0.5, 1)


def test_critical_exponent_constant_across_nodes():
    _, f = const_field(2.0, 2.0, 2.0)
    crit = critical_exponent(f.p_diag, 0.25, 1)
    assert np.all(crit == crit[0])


# -- structural conditions ----------------------------------------------------


def test_constant_exponents_pass_P_Q_R():
    _, f = const_field(2.0, 2.0, 2.0)
    rep = validate_conditions(f, 0.25, 1)
    assert rep["P"].passed and rep["Q"].passed and rep["R"].passed


def test_supercritical_q_fails_Q():
    _, f = const_field(2.0, 5.0, 2.0)
    rep = validate_conditions(f, 0.25, 1)
    assert not rep["Q"].passed
    assert rep["Q"].witness in set(f.omega_index.tolist())
    assert rep["P"].passed and rep["R"].passed


def test_asymmetric_pair_fails_P_with_that_pair():
    grid, f = const_field(2.0, 2.0, 2.0, resolution=8)
    P = np.array(f.p_values)
    P[2, 5] = 2.1
    bad = ExponentField(P, f.q_values, f.r_values, f.omega_index)
    rep = validate_conditions(bad, 0.25, 1)
    assert not rep["P"].passed
    assert set(rep["P"].witness) == {2, 5}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_symmetric_field_passes_and_any_perturbation_fails(seed):
    rng = np.random.default_rng(seed)
    n = 10
    A = rng.uniform(1.2, 3.5, (n, n))
    P = 0.5 * (A + A.T)
    idx = np.arange(3, 7)
    f = ExponentField(P, np.full(4, 2.0), np.full(4, 2.0), idx)
    assert validate_conditions(f, 0.25, 1)["P"].passed
    i, j = rng.choice(n, 2, replace=False)
    P2 = P.copy()
    P2[i, j] += 1e-9
    f2 = ExponentField(P2, f.q_values, f.r_values, idx)
    assert not validate_conditions(f2, 0.25, 1)["P"].passed


def test_field_extremes_match_samples():
    _, f = field_for(F.bump(2.0, 0.5, (0.5,), 0.3), F.affine(2.5, (0.5,)), F.affine(1.5, (1.0,)))
    assert f.p_minus == f.p_values.min() and f.p_plus == f.p_values.max()
    assert f.q_minus == f.q_values.min() and f.r_plus == f.r_values.max()
    assert np.array_equal(f.p_values, f.p_values.T)


def test_q_below_p_reported():
    _, f = const_field(2.5, 2.0, 2.0)
    assert not validate_conditions(f, 0.25, 1)["q>=p(x,x)"].passed


@pytest.mark.parametrize("p, r, q, ok, link", [
    (2.0, 2.5, 3.0, True, None),
    (2.0, 2.0, 3.0, False, "p+ < r-"),
    (2.0, 3.5, 3.8, True, None),
    (2.0, 2.5, 4.2, False, None),
])
def test_growth_chain(p, r, q, ok, link):
    _, f = const_field(p, q, r)
    rep = validate_growth_G(f, 0.25, 1)
    assert rep.passed is ok
    if link:
        assert link in rep["G"].detail


def test_smooth_bump_profile():
    t = np.array([-1.5, -1.0, 0.0, 0.5, 1.0])
    b = smooth_bump(t)
    assert b[2] == 1.0 and b[0] == 0.0 and b[1] == 0.0 and b[4] == 0.0
    assert 0.0 < b[3] < 1.0


def test_family_missing_parameter():
    with pytest.raises(ValueError, match="radius"):
        F("bump", {"base": 2.0, "height": 1.0, "center": (0.5,)})


# -- (A1) / (A2) witnesses ------------------------------------------------------


def oracle_witness_exists(grid, f, which):
    """Exhaustive scan over node-centred balls, written independently of the library search."""
    x = grid.coords
    h = grid.spacing
    lo, hi = np.asarray(grid.omega, dtype=float).T
    diam = np.linalg.norm(hi - lo)
    radii = h * 2.0 ** np.arange(0, 40)
    radii = radii[radii <= diam]
    pos = {int(g): k for k, g in enumerate(f.omega_index)}
    found = []
    for c in f.omega_index:
        room = min((x[c] - lo).min(), (hi - x[c]).min())
        for rad in radii:
            if rad > room:
                continue
            nodes = [i for i in range(len(x)) if np.linalg.norm(x[i] - x[c]) < rad]
            k = [pos[i] for i in nodes]
            pmin = min(f.p_values[i, j] for i in nodes for j in range(len(x)))
            pmax = max(f.p_values[i, j] for i in nodes for j in range(len(x)))
            qs, rs = f.q_values[k], f.r_values[k]
            if which == "A1" and rs.max() < min(pmin, qs.min()):
                found.append((int(c), float(rad)))
            if which == "A2" and rs.min() > max(pmax, qs.max()):
                found.append((int(c), float(rad)))
    return found


@pytest.mark.parametrize("r, a1, a2", [(1.5, True, False), (3.5, False, True)])
def test_constant_witnesses(r, a1, a2):
    grid, f = const_field(2.0, 2.0, r)
    assert (find_A1_witness(grid, f) is not None) is a1
    assert (find_A2_witness(grid, f) is not None) is a2


@pytest.mark.parametrize("height, which", [(-0.5, "A1"), (1.5, "A2")])
def test_local_witness_matches_exhaustive_scan(height, which):
    grid, f = field_for(F.constant(2.0), F.constant(2.0), F.bump(2.0, height, (0.6,), 0.15), resolution=24)
    finder = find_A1_witness if which == "A1" else find_A2_witness
    ball = finder(grid, f)
    oracle = oracle_witness_exists(grid, f, which)
    assert ball is not None and oracle
    assert (ball.center_node, ball.radius) in oracle
    assert abs(ball.center[0] - 0.6) < ball.radius + 0.15
    other = find_A2_witness if which == "A1" else find_A1_witness
    assert other(grid, f) is None


@settings(max_examples=25, deadline=None)
@given(st.floats(1.2, 3.6), st.floats(-1.0, 1.0), st.floats(0.05, 0.5))
def test_witness_conditions_exclusive_on_every_ball(base, height, radius):
    grid, f = field_for(F.constant(2.0), F.affine(2.2, (0.4,)), F.bump(base, height, (0.4,), radius), resolution=16)
    for ball in candidate_balls(grid):
        ext = ball.local_extremes(f)
        a1 = ext["r_plus"] < min(ext["p_minus"], ext["q_minus"])
        a2 = ext["r_minus"] > max(ext["p_plus"], ext["q_plus"])
        assert not (a1 and a2)


def test_witness_ball_lies_in_omega():
    grid, f = const_field(2.0, 2.0, 1.5)
    ball = find_A1_witness(grid, f)
    assert set(ball.nodes) <= set(f.omega_index.tolist())


# -- ProblemConfig ----------------------------------------------------------------


@pytest.mark.parametrize("kw", [{"s": 1.0}, {"s": 0.0}, {"alpha": -1.0}, {"beta": -0.1}, {"dimension": 3}])
def test_problem_config_rejects(kw):
    base = dict(dimension=1, s=0.25, omega=UNIT, p=F.constant(2.0), r=F.constant(2.0))
    base.update(kw)
    with pytest.raises(ValueError):
        ProblemConfig(**base)


def test_default_resolution_and_box():
    cfg = ProblemConfig(dimension=1, s=0.25, omega=UNIT, p=F.constant(2.0), r=F.constant(2.0))
    assert cfg.nodes_per_axis == 64
    assert cfg.truncation_box == ((-1.0, 2.0),)
    cfg2 = ProblemConfig(dimension=2, s=0.25, omega=((0, 1), (0, 1)), p=F.constant(2.0), r=F.constant(2.0))
    assert cfg2.nodes_per_axis == 24
