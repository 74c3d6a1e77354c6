import math

import numpy as np
import pytest

from pckhdmr.bench import (CANTILEVER_DISTRIBUTIONS, NM_TO_NMM, CantileverInputs, cantilever,
                           cantilever_G, cantilever_space, cost_function, get_function,
                           rosenbrock9, sample_count_formula, table3_function)

# Golden values: straight-line arithmetic at the input means (theta1 = 0,
# theta2 = -pi/5), computed once outside the package and frozen here.
G_MEANS_TORQUE_KNM = -15942.573542992835
G_MEANS_TORQUE_NM = 96.47898215614401


def test_rosenbrock_values():
    assert rosenbrock9(np.ones(9)) == 0.0
    assert rosenbrock9(np.zeros(9)) == 8.0
    assert rosenbrock9(np.full(9, 2.0)) == 3208.0
    with pytest.raises(ValueError):
        rosenbrock9(np.zeros(8))


def test_table3_hand_values():
    assert table3_function(1)(np.zeros(2)) == pytest.approx(1.0)
    # constant terms at zero: 100 + 100 + 9 + 2 + 0 + 847 + 200 + 49 + 45
    assert table3_function(4)(np.zeros(10)) == pytest.approx(1352.0)
    x = np.zeros(16)
    x[0] = 1.0
    assert table3_function(6)(x) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        table3_function(7)


def _independent(no, x):
    """Second transcription, term by term with plain loops."""
    if no == 1:
        return math.sin(x[0] + x[1]) + (x[0] - x[1]) ** 2 - 1.5 * x[0] + 2.5 * x[1] + 1
    if no == 2:
        a = x[1] - 1.275 * (x[0] / math.pi) ** 2 - 5 * x[0] / math.pi - 6
        return a * a + 10 * (1 - 0.125 / math.pi) * math.cos(x[0])
    if no == 3:
        return sum((x[i + 1] ** 2 - x[i]) ** 2 + (x[i] - 1) ** 2 for i in range(7))
    if no == 4:
        return (x[0] ** 2 + x[1] ** 2 + x[0] * x[1] - 14 * x[0] - 16 * x[1] + (x[2] - 10) ** 2
                + 4 * (x[3] - 5) ** 2 + (x[4] - 3) ** 2 + 2 * (x[5] - 1) ** 2 + 5 * x[6] ** 2
                + 7 * (x[7] - 11) ** 2 + 2 * (x[8] - 10) ** 2 + (x[9] - 7) ** 2 + 45)
    if no == 5:
        c = [-6.089, -17.164, -34.054, -5.914, -24.721, -14.986, -24.100, -10.708, -26.662, -22.179]
        s = sum(x)
        return sum(x[i] * (c[i] + math.log(x[i] / s)) for i in range(10))
    if no == 6:
        return (x[0] - 1) ** 2 + sum(i * (2 * x[i - 1] ** 2 - x[i - 2]) ** 2 for i in range(2, 17))
    raise ValueError(no)


@pytest.mark.parametrize("no", range(1, 7))
def test_table3_matches_independent_transcription(no):
    bf = table3_function(no)
    rng = np.random.default_rng(no)
    for x in bf.space.uniform(rng, 25):
        assert bf(x) == pytest.approx(_independent(no, list(x)), rel=1e-12, abs=1e-12)


def test_table3_spaces():
    assert table3_function(2).space.lower.tolist() == [-5, 0]
    assert table3_function(2).space.upper.tolist() == [10, 15]
    assert table3_function(5).space.dim == 10
    assert table3_function(6).space.dim == 16


def test_cost_function_values():
    f = cost_function(10)
    assert f(np.ones(10)) == pytest.approx(18.0)
    assert f(np.zeros(10)) == 0.0
    assert cost_function(2)(np.array([1.0, 0.0])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        cost_function(1)


def test_sample_count_formula():
    got = [sample_count_formula(p, 8) for p in (10, 15, 20, 25, 30, 35)]
    assert got == [2276, 5251, 9451, 14876, 21526, 29401]
    assert all(isinstance(v, int) for v in got)
    assert sample_count_formula(1, 2) == 2
    with pytest.raises(ValueError):
        sample_count_formula(0, 8)


def test_cantilever_golden_values():
    m = CantileverInputs.means()
    assert m.theta1 == 0.0 and m.theta2 == pytest.approx(-math.pi / 5)
    assert cantilever_G(m) == pytest.approx(G_MEANS_TORQUE_KNM, rel=1e-9)
    assert cantilever_G(m, NM_TO_NMM) == pytest.approx(G_MEANS_TORQUE_NM, rel=1e-9)


def test_cantilever_no_load_and_strength_shift():
    base = dict(t=5, d=42, L1=120, L2=60, F1=0, F2=0, P=0, T=0, theta1=0.3, theta2=-1, Sy=220)
    assert cantilever_G(CantileverInputs(**base)) == 220
    m = CantileverInputs.means()
    shifted = CantileverInputs(**{**m.__dict__, "Sy": 2 * m.Sy})
    assert cantilever_G(shifted) - cantilever_G(m) == pytest.approx(m.Sy, rel=1e-12)


def test_cantilever_geometry_validation():
    with pytest.raises(ValueError):
        CantileverInputs(0, 42, 120, 60, 3, 3, 12, 90, 0, 0, 220)
    with pytest.raises(ValueError):
        CantileverInputs(25, 42, 120, 60, 3, 3, 12, 90, 0, 0, 220)


def test_cantilever_space_and_registry():
    s = cantilever_space()
    assert s.dim == 11
    assert (s.lower[2], s.upper[2]) == (119.75, 120.25)
    assert (s.lower[9], s.upper[9]) == pytest.approx((-4 * math.pi / 5, 2 * math.pi / 5))
    for d, lo, hi in zip(CANTILEVER_DISTRIBUTIONS, s.lower, s.upper):
        assert lo < d.mean < hi
    assert get_function("cantilever").name == "cantilever"
    mean_vec = np.array([d.mean for d in CANTILEVER_DISTRIBUTIONS])
    assert get_function("cantilever/nm")(mean_vec) == pytest.approx(G_MEANS_TORQUE_NM, rel=1e-9)
    assert get_function("cantilever")(mean_vec) == pytest.approx(G_MEANS_TORQUE_KNM, rel=1e-9)
    with pytest.raises(KeyError):
        get_function("nope")
    assert cantilever().p == 11
