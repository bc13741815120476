import numpy as np
import pytest

from app.domain.gradcheck import CHECKED_LOSSES, relative_error, run_gradcheck, tiny_model
from app.schemas.training import Subnet


def test_twenty_random_models_pass():
    report = run_gradcheck(dims=6, batch=4, trials=20, seed=0, num_classes=3)
    assert report.passed, [e.model_dump() for e in report.failures]
    assert report.trials == 20
    assert report.max_rel_error <= 1e-5


@pytest.mark.slow
def test_twenty_random_models_pass_at_width_16():
    report = run_gradcheck(dims=16, batch=4, trials=20, seed=1, num_classes=4)
    assert report.passed, [e.model_dump() for e in report.failures]


def test_every_parameter_entry_is_compared():
    dims, classes = 3, 2
    report = run_gradcheck(dims=dims, batch=3, trials=1, seed=1, num_classes=classes)
    params = tiny_model(dims, classes, seed=0).parameters()
    total_entries = sum(v.size for tensors in params.values() for v in tensors.values())
    assert report.compared + report.kinks * len(CHECKED_LOSSES) == total_entries * len(CHECKED_LOSSES)
    assert report.kinks <= total_entries // 10


def test_report_covers_every_loss_and_subnet():
    report = run_gradcheck(dims=3, batch=3, trials=1, seed=1, num_classes=2)
    assert {e.loss for e in report.entries} == set(CHECKED_LOSSES)
    assert {e.subnet for e in report.entries} == {s.value for s in Subnet}
    assert (report.dims, report.batch, report.trials) == (3, 3, 1)


def test_injected_bug_is_detected():
    report = run_gradcheck(dims=3, batch=3, trials=1, seed=0, num_classes=2, perturb_bug=True)
    assert not report.passed
    first = report.failures[0]
    assert (first.trial, first.loss, first.subnet) == (0, "ce", "e_x")


class TestRelativeError:
    def test_tiny_gradients_use_floor(self):
        assert relative_error(np.array([1e-9]), np.array([0.0])) == pytest.approx(1e-6)

    def test_scalar(self):
        assert relative_error(np.array([2.0]), np.array([1.0])) == pytest.approx(0.5)

    def test_worst_entry_wins(self):
        assert relative_error(np.array([1.0, 2.0]), np.array([1.0, 2.2])) == pytest.approx(0.2 / 2.2)

    def test_one_bad_entry_is_not_averaged_away(self):
        analytic = np.ones(1000)
        numeric = analytic.copy()
        numeric[7] = 1.001
        assert relative_error(analytic, numeric) == pytest.approx(0.001 / 1.001)

    def test_empty(self):
        assert relative_error(np.array([]), np.array([])) == 0.0


def test_invalid_arguments():
    with pytest.raises(ValueError):
        run_gradcheck(batch=1, trials=1)
