import numpy as np
import pytest

from app.core.errors import ConvergenceError, DataError, DegeneracyError, DomainError
from app.estimation.calibration import GlobalLayout, require_converged
from app.estimation.lm import FitData, LMOptions, ModelFunction, check_jacobian, lm_fit
from app.estimation.lorentzian import LORENTZIAN_MODEL


def _exp(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return p[0] * np.exp(-p[1] * x)


def _exp_jacobian(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    e = np.exp(-p[1] * x)
    return np.column_stack((e, -p[0] * x * e))


EXP_MODEL = ModelFunction(func=_exp, n_params=2, jacobian=_exp_jacobian, names=("amplitude", "rate"))
LINE_MODEL = ModelFunction(
    func=lambda x, p: p[0] + p[1] * x,
    n_params=2,
    jacobian=lambda x, p: np.column_stack((np.ones_like(x), x)),
    names=("intercept", "slope"),
)


def test_noiseless_exponential_is_recovered_exactly() -> None:
    x = np.linspace(0.0, 4.0, 30)
    data = FitData.of(x, _exp(x, np.array([3.0, 0.7])), 0.01)

    fit = lm_fit(EXP_MODEL, data, [1.0, 0.1])

    assert fit.converged
    assert fit.values == pytest.approx([3.0, 0.7], rel=1e-8)
    assert fit.value("rate") == pytest.approx(0.7, rel=1e-8)
    assert fit.dof == 28


def test_weighted_line_matches_closed_form_solution() -> None:
    rng = np.random.default_rng(3)
    x = np.linspace(-1.0, 2.0, 25)
    sigma = 0.1 + 0.05 * x**2
    y = 0.4 - 1.3 * x + sigma * rng.standard_normal(x.size)

    fit = lm_fit(LINE_MODEL, FitData.of(x, y, sigma), [0.0, 0.0])

    design = np.column_stack((np.ones_like(x), x)) / sigma[:, None]
    normal = design.T @ design
    expected = np.linalg.solve(normal, design.T @ (y / sigma))
    assert fit.values == pytest.approx(expected, rel=1e-8, abs=1e-12)
    assert fit.cov == pytest.approx(np.linalg.inv(normal), rel=1e-8)
    residual = (y - design @ expected * sigma) / sigma
    assert fit.chi2 == pytest.approx(float(residual @ residual), rel=1e-8)


def test_nonlinear_fit_agrees_with_a_dense_grid_search() -> None:
    rng = np.random.default_rng(5)
    x = np.linspace(0.0, 3.0, 40)
    y = np.exp(-1.234 * x) + 0.02 * rng.standard_normal(x.size)
    model = ModelFunction(func=lambda x, p: np.exp(-p[0] * x), n_params=1, names=("rate",))

    fit = lm_fit(model, FitData.of(x, y, 0.02), [0.5])

    grid = np.arange(1.0, 1.5, 1e-5)
    chi2 = [np.sum(((y - np.exp(-k * x)) / 0.02) ** 2) for k in grid]
    best = grid[int(np.argmin(chi2))]
    assert abs(fit.parameters[0] - best) <= 1e-5
    assert fit.chi2 <= min(chi2) + 1e-6


def test_analytic_jacobians_agree_with_finite_differences() -> None:
    x = np.linspace(0.0, 4.0, 20)
    freq = np.linspace(137.0, 139.5, 60)

    assert check_jacobian(EXP_MODEL, x, np.array([3.0, 0.7])) < 1e-6
    assert check_jacobian(LORENTZIAN_MODEL, freq, np.array([138.275, 0.138, 1e-6, 2e-7])) < 1e-5


@pytest.mark.parametrize("layout", [GlobalLayout(), GlobalLayout(n_offsets=3), GlobalLayout(casimir=True, drift=True)])
def test_global_layout_jacobian_agrees_with_finite_differences(layout: GlobalLayout) -> None:
    rng = np.random.default_rng(1)
    n = 24
    x = np.column_stack(
        (
            rng.uniform(4e-6, 11e-6, n),
            rng.choice([-0.2058, -0.1372, 0.0686], n),
            np.repeat([0.0, 1.0, 2.0], n // 3),
            np.tile(np.arange(8) * 60.0, 3),
        )
    )
    tail = ([2.34e-28] if layout.casimir else []) + ([1e-3] if layout.drift else [])
    p = np.array([6.0] * layout.n_offsets + [-3.3e-7, 4.24e-13, -0.0644] + tail)

    assert check_jacobian(layout.model(), x, p) < 1e-5


def test_too_few_points_is_a_data_error() -> None:
    with pytest.raises(DataError):
        lm_fit(LINE_MODEL, FitData.of([0.0, 1.0], [1.0, 2.0]), [0.0, 0.0])


def test_parameter_without_information_is_degenerate() -> None:
    model = ModelFunction(
        func=lambda x, p: p[0] * x + 0.0 * p[1],
        n_params=2,
        jacobian=lambda x, p: np.column_stack((x, np.zeros_like(x))),
        names=("slope", "unused"),
    )

    with pytest.raises(DegeneracyError, match="unused"):
        lm_fit(model, FitData.of([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0]), [0.5, 0.0])


def test_duplicated_parameters_are_degenerate() -> None:
    model = ModelFunction(
        func=lambda x, p: (p[0] + p[1]) * x,
        n_params=2,
        jacobian=lambda x, p: np.column_stack((x, x)),
    )

    with pytest.raises(DegeneracyError):
        lm_fit(model, FitData.of([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0]), [0.5, 0.1])


def test_iteration_cap_reports_non_convergence() -> None:
    x = np.linspace(0.0, 4.0, 30)
    data = FitData.of(x, _exp(x, np.array([3.0, 0.7])), 0.01)

    fit = lm_fit(EXP_MODEL, data, [0.1, 3.0], LMOptions(max_iterations=1))

    assert not fit.converged
    assert fit.iterations == 1


def _line_only_at_start(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    if p[0] == 1.0 and p[1] == 0.0:
        return p[0] + p[1] * x
    return np.full_like(x, np.nan)


def test_search_stalled_away_from_the_minimum_is_not_converged() -> None:
    x = np.linspace(0.0, 4.0, 20)
    data = FitData.of(x, 2.0 + 3.0 * x, 0.1)
    model = ModelFunction(
        func=_line_only_at_start,
        n_params=2,
        jacobian=lambda x, p: np.column_stack((np.ones_like(x), x)),
        names=("intercept", "slope"),
    )

    fit = lm_fit(model, data, [1.0, 0.0])

    assert not fit.converged
    assert fit.parameters == (1.0, 0.0)
    with pytest.raises(ConvergenceError, match="line"):
        require_converged(fit, "line")


def test_exact_fit_with_no_better_step_is_converged() -> None:
    x = np.linspace(0.0, 4.0, 20)

    fit = lm_fit(LINE_MODEL, FitData.of(x, 2.0 + 3.0 * x, 0.1), [2.0, 3.0])

    assert fit.converged
    assert fit.chi2 == 0.0


def test_fit_data_rejects_non_positive_uncertainties() -> None:
    with pytest.raises(DataError):
        FitData.of([0.0, 1.0, 2.0], [1.0, 2.0, 3.0], [1.0, 0.0, 1.0])


def test_wrong_number_of_initial_parameters() -> None:
    with pytest.raises(DomainError):
        lm_fit(LINE_MODEL, FitData.of([0.0, 1.0, 2.0], [1.0, 2.0, 3.0]), [0.0])
