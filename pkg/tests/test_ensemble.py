import numpy as np
import pytest

from src.api.v1.endpoints import ExperimentConfig, ForestConfig, SplineConfig
from src.distributions import Family, PredictiveBatch
from src.ensemble.quantiles import (
    DEFAULT_TAUS,
    QuantileMatrix,
    TauGrid,
    combine_simple,
    extract_quantiles,
    rearrange_noncrossing,
)
from src.ensemble.roster import (
    ALGORITHM_IDS,
    BASE_LEARNERS,
    AlgorithmKind,
    AlgorithmSpec,
    ROSTER,
    file_slug,
    get_algorithm,
    required_learners,
)
from src.ensemble.runner import run_all_algorithms
from src.ensemble.stacking import StackedModel, apply_combiners, fit_combiners, stack_fit, stack_predict
from src.errors import ConfigError, DomainError, FitError, PreconditionError, ShapeError, SizeError
from src.metrics import scoring_sums
from src.models.quantreg import pinball_mean
from src.services.splitting import split_three_way
from src.services.synthetic import generate_synthetic

GRID = TauGrid()


def _matrix(values, grid: TauGrid = TauGrid((0.25, 0.5, 0.75))) -> QuantileMatrix:
    return QuantileMatrix(np.asarray(values, dtype=float), grid)


def test_zero_mass_fills_low_levels_with_zero():
    batch = PredictiveBatch(Family.ZAGA, [10.0], [0.5], [0.3])
    row = extract_quantiles(batch, GRID).values[0]
    assert np.all(row[:6] == 0.0)
    assert row[7] > 0.0
    assert np.all(np.diff(row) >= 0.0)


def test_extract_quantiles_accepts_distribution_sequence():
    batch = PredictiveBatch(Family.ZAIG, [3.0, 8.0], [0.4, 0.2], [0.1, 0.6])
    a = extract_quantiles(batch, GRID, ids=np.array([5, 6]))
    b = extract_quantiles(list(batch), GRID)
    assert np.array_equal(a.values, b.values)
    assert a.ids.tolist() == [5, 6]


def test_tau_grid_validation():
    assert TauGrid().levels == DEFAULT_TAUS
    with pytest.raises(DomainError):
        TauGrid((0.5, 0.4))
    with pytest.raises(DomainError):
        TauGrid((0.0, 0.5))
    with pytest.raises(DomainError):
        TauGrid(())


def test_matrix_rejects_negative_and_wrong_width():
    with pytest.raises(DomainError):
        _matrix([[-1.0, 0.0, 1.0]])
    with pytest.raises(ShapeError):
        _matrix([[1.0, 2.0]])


def test_mean_and_median_combiners():
    mean = combine_simple("mean", [_matrix([[1.0, 1.0, 1.0]]), _matrix([[3.0, 3.0, 3.0]])])
    assert mean.values.tolist() == [[2.0, 2.0, 2.0]]
    parts = [_matrix([[v, v, v]]) for v in (1.0, 2.0, 3.0, 10.0)]
    assert combine_simple("median", parts).values.tolist() == [[2.5, 2.5, 2.5]]


def test_combining_identical_matrices_is_identity():
    m = _matrix([[0.0, 1.0, 4.0], [2.0, 2.5, 9.0]])
    for kind in ("mean", "median"):
        assert np.array_equal(combine_simple(kind, [m, m, m]).values, m.values)


def test_combiner_errors():
    m = _matrix([[1.0, 2.0, 3.0]])
    with pytest.raises(ShapeError):
        combine_simple("mean", [m])
    with pytest.raises(ShapeError):
        combine_simple("mean", [m, _matrix([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])])
    with pytest.raises(ShapeError):
        combine_simple("max", [m, m])


def test_rearrangement_sorts():
    assert rearrange_noncrossing([3.0, 1.0, 2.0]) == [1.0, 2.0, 3.0]
    crossing = _matrix([[3.0, 1.0, 2.0]])
    assert not crossing.is_noncrossing()
    assert crossing.rearranged().values.tolist() == [[1.0, 2.0, 3.0]]
    with pytest.raises(DomainError):
        rearrange_noncrossing([1.0, float("nan")])


def test_roster_holds_seventeen_algorithms():
    assert len(ROSTER) == 17
    assert len(set(ALGORITHM_IDS)) == 17
    kinds = [spec.kind for spec in ROSTER]
    assert kinds.count(AlgorithmKind.INDIVIDUAL) == 6
    assert kinds.count(AlgorithmKind.MEAN) == 5
    assert kinds.count(AlgorithmKind.MEDIAN) == 1
    assert kinds.count(AlgorithmKind.STACKING) == 5
    stacked_all = get_algorithm(f"Stacking({','.join(BASE_LEARNERS)})")
    assert stacked_all.bases == BASE_LEARNERS
    assert required_learners([stacked_all.id]) == list(BASE_LEARNERS)
    assert "(" not in file_slug(stacked_all.id) and "," not in file_slug(stacked_all.id)


def test_roster_errors():
    with pytest.raises(ConfigError):
        get_algorithm("Mean(DRF-ZAIG)")
    with pytest.raises(ConfigError):
        AlgorithmSpec("Mean(x)", AlgorithmKind.MEAN, ("x",))
    with pytest.raises(ConfigError):
        AlgorithmSpec("DRF-ZAIG", AlgorithmKind.INDIVIDUAL, ("a", "b"))


def _stack_inputs(seed: int = 0, n: int = 120):
    rng = np.random.default_rng(seed)
    y = rng.gamma(1.5, 10.0, size=n)
    y[rng.uniform(size=n) < 0.2] = 0.0
    grid = TauGrid((0.1, 0.5, 0.9))
    noisy = [
        QuantileMatrix(np.sort(np.abs(y[:, None] + rng.normal(scale=s, size=(n, 3))), axis=1), grid)
        for s in (2.0, 6.0)
    ]
    return y, grid, noisy


def test_stacking_recovers_an_exact_base():
    y, grid, noisy = _stack_inputs()
    exact = QuantileMatrix(np.repeat(y[:, None], 3, axis=1), grid)
    model = fit_combiners(["exact", "noisy"], [exact, noisy[0]], y, grid)
    assert model.train_loss == pytest.approx((0.0, 0.0, 0.0), abs=1e-8)
    out = apply_combiners(model, [exact, noisy[0]])
    assert out.values == pytest.approx(np.repeat(y[:, None], 3, axis=1), abs=1e-6)


def test_stacking_is_no_worse_than_best_base_on_training_rows():
    y, grid, noisy = _stack_inputs(seed=4)
    model = fit_combiners(["a", "b"], noisy, y, grid)
    for j, tau in enumerate(grid):
        losses = [pinball_mean(m.column(j), y, tau) for m in noisy]
        assert [row[j] for row in model.base_loss] == pytest.approx(losses)
        assert model.train_loss[j] <= min(losses) + 1e-9


def test_duplicate_bases_keep_one_column():
    y, grid, noisy = _stack_inputs(seed=2)
    model = fit_combiners(["a", "a-copy"], [noisy[0], noisy[0]], y, grid)
    for combiner in model.combiners:
        assert combiner.coefficients[1] == 0.0
        assert combiner.dropped == (1,)


def test_stacked_model_round_trip_and_checks():
    y, grid, noisy = _stack_inputs(seed=3)
    model = fit_combiners(["a", "b"], noisy, y, grid)
    assert StackedModel.from_dict(model.to_dict()) == model
    with pytest.raises(ShapeError):
        apply_combiners(model, noisy[:1])
    with pytest.raises(ShapeError):
        fit_combiners(["a"], noisy, y, grid)


def test_overlapping_stacking_sets_are_rejected():
    d = generate_synthetic({"n": 60}, seed=1)
    calls = []

    def never(base_id, train):
        calls.append(base_id)
        raise AssertionError("learner must not be fitted")

    with pytest.raises(PreconditionError):
        stack_fit(d.take(range(0, 40)), d.take(range(30, 60)), ["a", "b"], GRID, never)
    assert calls == []


class _ConstantModel:
    def __init__(self, mu: float):
        self.mu = mu

    def predict_batch(self, X):
        n = np.atleast_2d(X).shape[0]
        return PredictiveBatch(Family.ZAGA, np.full(n, self.mu), np.full(n, 0.5), np.full(n, 0.1))


def test_stack_fit_and_predict_with_constant_bases():
    d = generate_synthetic({"n": 90}, seed=2)
    set1, set2, new = d.take(range(0, 30)), d.take(range(30, 60)), d.take(range(60, 90))
    grid = TauGrid((0.25, 0.5, 0.75))
    means = {"a": 2.0, "b": 5.0}

    model = stack_fit(set1, set2, ["a", "b"], grid, lambda base_id, train: _ConstantModel(means[base_id]))
    assert model.base_ids == ("a", "b")
    for combiner in model.combiners:
        assert combiner.dropped == (0, 1)

    out = stack_predict(model, {b: _ConstantModel(m) for b, m in means.items()}, new.X, new.ids)
    assert out.shape == (30, 3)
    assert np.all(out.values == out.values[0])
    assert np.all(np.diff(out.values[0]) >= 0.0)

    with pytest.raises(ShapeError):
        stack_predict(model, {"a": _ConstantModel(2.0)}, new.X)


def test_stack_fit_wraps_base_failures():
    d = generate_synthetic({"n": 60}, seed=1)

    def failing(base_id, train):
        raise SizeError("too few samples")

    with pytest.raises(FitError) as info:
        stack_fit(d.take(range(0, 30)), d.take(range(30, 60)), ["a"], GRID, failing)
    assert info.value.learner_id == "a"


@pytest.fixture(scope="module")
def small_run():
    config = ExperimentConfig(
        seed=3,
        forest=ForestConfig(n_trees=5),
        splines=SplineConfig(n_interior_knots=4),
    )
    split = split_three_way(generate_synthetic({"n": 450}, seed=3), seed=3)
    return split, run_all_algorithms(split, TauGrid(tuple(config.taus)), config)


def test_run_produces_every_algorithm(small_run):
    split, output = small_run
    assert output.complete
    assert list(output.matrices) == list(ALGORITHM_IDS)
    for matrix in output.matrices.values():
        assert matrix.shape == (len(split.set3), 17)
        assert matrix.is_noncrossing()
        assert np.array_equal(matrix.ids, split.set3.ids)
    assert len(output.stacked) == 5


def test_run_mean_combiner_matches_members(small_run):
    _, output = small_run
    a, b = (output.matrices[k] for k in ("DRF-ZAIG", "DRF-ZAGA"))
    mean = output.matrices["Mean(DRF-ZAIG,DRF-ZAGA)"]
    assert mean.values == pytest.approx((a.values + b.values) / 2.0, rel=1e-12, abs=1e-12)


def test_run_records_learner_fits_per_stage(small_run):
    _, output = small_run
    assert "DRF-ZAIG (set1)" in output.learner_diagnostics
    assert "DRF-ZAIG (set1+set2)" in output.learner_diagnostics
    assert "GAMLSS-ZAIG (set1)" not in output.learner_diagnostics


def test_learner_failure_only_fails_dependent_algorithms():
    config = ExperimentConfig(
        forest=ForestConfig(n_trees=2, min_leaf=40),
        splines=SplineConfig(n_interior_knots=4),
        algorithms=["GAMLSS-ZAIG", "DRF-ZAIG", "Mean(DRF-ZAIG,DRF-ZAGA)"],
    )
    # 90 rows leave 60 for the refit, fewer than 2 * min_leaf
    split = split_three_way(generate_synthetic({"n": 90}, seed=0), seed=0)
    output = run_all_algorithms(split, TauGrid(tuple(config.taus)), config)
    assert output.status["GAMLSS-ZAIG"].success
    assert not output.status["DRF-ZAIG"].success
    assert not output.status["Mean(DRF-ZAIG,DRF-ZAGA)"].success
    assert not output.complete
    assert list(output.matrices) == ["GAMLSS-ZAIG"]



def test_duplicate_bases_match_single_column_fit():
    y, grid, noisy = _stack_inputs(seed=6)
    single = fit_combiners(["a"], [noisy[1]], y, grid)
    doubled = fit_combiners(["a", "a-copy"], [noisy[1], noisy[1]], y, grid)
    a = apply_combiners(single, [noisy[1]])
    b = apply_combiners(doubled, [noisy[1], noisy[1]])
    assert np.allclose(a.values, b.values, rtol=0.0, atol=1e-8)


def _truth_deviation_bound(tau: float) -> float:
    # low levels sit on mostly-zero columns, so the few small positive truths carry large relative error
    if tau <= 0.025:
        return 1.5
    if tau <= 0.1:
        return 1.0
    if tau <= 0.3:
        return 0.4
    return 0.1


@pytest.mark.slow
def test_true_quantiles_pass_through_the_combiner():
    d = generate_synthetic({"n": 6000}, seed=12)
    set2 = split_three_way(d, seed=12).set2
    truth = extract_quantiles(set2.truth_batch(), GRID)
    model = fit_combiners(["truth"], [truth], set2.y, GRID)
    out = apply_combiners(model, [truth])

    pooled = []
    for j, tau in enumerate(GRID):
        assert model.train_loss[j] <= pinball_mean(truth.column(j), set2.y, tau) + 1e-7
        column = truth.column(j)
        positive = column > 0.0
        deviation = np.abs(out.column(j)[positive] - column[positive]) / column[positive]
        assert deviation.mean() <= _truth_deviation_bound(tau)
        pooled.append(deviation)
    assert np.concatenate(pooled).mean() <= 0.1


@pytest.mark.slow
def test_stacking_competes_with_best_base():
    stack_id = f"Stacking({','.join(BASE_LEARNERS)})"
    config = ExperimentConfig(algorithms=[*BASE_LEARNERS, stack_id])
    grid = TauGrid(tuple(config.taus))
    wins = 0
    for seed in range(10):
        split = split_three_way(generate_synthetic({"n": 6000}, seed=seed), seed=seed)
        output = run_all_algorithms(split, grid, config.model_copy(update={"seed": seed}))
        y = split.set3.y

        stacked = output.stacked[stack_id]
        for j in range(len(grid)):
            best_base = min(row[j] for row in stacked.base_loss)
            assert stacked.train_loss[j] <= best_base + 1e-7

        def score(algorithm_id: str) -> float:
            return float(np.mean(scoring_sums(output.matrices[algorithm_id].values, y, grid)))

        wins += score(stack_id) <= 1.02 * min(score(b) for b in BASE_LEARNERS)
    assert wins >= 8
