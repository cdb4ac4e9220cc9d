import math

import numpy as np
import pytest

from rank1sdp.generators import FAMILIES, biquadratic, biquadratic_matrix, generate
from rank1sdp.moment import squared_form
from rank1sdp.tensor import GenTensor, SymTensor


def test_formula_entries():
    assert generate("alt-reciprocal-3", 5, 3).entry(1, 1, 1) == pytest.approx(-3.0)
    assert generate("motzkin-6", 3, 6).entry(1, 1, 1, 1, 1, 1) == 2.0
    assert generate("sin-sym", 2, 3).entry(1, 2, 2) == pytest.approx(math.sin(5))
    assert generate("arctan-4", 5, 4).entry(1, 2, 3, 4) == pytest.approx(
        math.atan(-1 / 5) + math.atan(2 / 5) + math.atan(-3 / 5) + math.atan(4 / 5)
    )
    assert generate("log-alt-5", 3, 5).entry(1, 2, 2, 3, 3) == pytest.approx(
        2 * math.log(2) - 2 * math.log(3)
    )


def test_general_families_follow_formulas():
    t = generate("cos-nonsym-3", 4, 3)
    assert t.data[1, 2, 3] == pytest.approx(math.cos(2 + 2 * 3 + 3 * 4))
    t = generate("tan-nonsym", 5, 3)
    assert t.data[2, 3, 4] == pytest.approx(math.tan(3 - 4 / 2 + 5 / 3))
    t = generate("exp-alt-5", 3, 5)
    assert t.data[0, 1, 2, 0, 1] == pytest.approx(
        math.exp(-1) - 2 * math.exp(-2) + 3 * math.exp(-3) - 4 * math.exp(-1) + 5 * math.exp(-2)
    )
    t = generate("arcsin-4", 4, 4)
    assert t.data[1, 2, 2, 3] == pytest.approx(
        math.asin(1 / 2) + math.asin(-2 / 3) + math.asin(-3 / 3) + math.asin(4 / 4)
    )
    assert t.data[1, 0, 2, 3] == 0.0
    assert t.data[0, 0, 0, 0] == 0.0


def test_biquadratic_squared_form_is_exact():
    gram, dims = squared_form(biquadratic())
    assert dims == (3, 3)
    np.testing.assert_allclose(gram, 3 * np.eye(9) - biquadratic_matrix(), atol=1e-12)


def test_gaussian_families_are_seeded():
    a = generate("gaussian-random", 3, 4, seed=7)
    b = generate("gaussian-random", 3, 4, seed=7)
    assert isinstance(a, SymTensor)
    np.testing.assert_array_equal(a.values, b.values)
    g = generate("gaussian-random-nonsym", 3, 3, seed=7)
    assert isinstance(g, GenTensor) and g.dims == (3, 3, 3)


def test_generator_errors():
    with pytest.raises(ValueError):
        generate("nope", 3, 3)
    with pytest.raises(ValueError):
        generate("arctan-4", 3, 3)
    with pytest.raises(ValueError):
        generate("motzkin-6", 4, 6)
    with pytest.raises(ValueError):
        generate("biquadratic-3x3x9", 3, 4)


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_every_family_builds(family):
    sizes = {"motzkin-6": (3, 6), "biquadratic-3x3x9": (3, 3), "arctan-4": (3, 4), "arcsin-4": (3, 4),
             "log-alt-5": (3, 5), "exp-alt-5": (3, 5)}
    n, m = sizes.get(family, (3, 3))
    t = generate(family, n, m, seed=1)
    assert np.all(np.isfinite(t.to_dense()))
