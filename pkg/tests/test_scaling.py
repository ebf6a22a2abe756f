import numpy as np
import pytest

from cavity_eit.scaling import fit_power_law


def test_exact_power_law():
    x = np.logspace(-3, -2, 6)
    law = fit_power_law(x, 7.0 * x**3)
    assert law.exponent == pytest.approx(3.0, abs=1e-12)
    assert law.prefactor == pytest.approx(7.0, rel=1e-10)
    assert law.max_residual < 1e-12 and abs(law.curvature) < 1e-10


def test_curvature_detects_mixed_orders():
    x = np.logspace(-2, 0, 9)
    law = fit_power_law(x, x**2 + x**4)
    assert law.curvature > 0.05


def test_rejects_nonpositive():
    with pytest.raises(ValueError):
        fit_power_law(np.array([1.0, 2.0, 3.0]), np.array([1.0, 0.0, 2.0]))
