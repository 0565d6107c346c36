import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from electgnn import evaluate as ev
from electgnn.data import DatasetSpec, label_dataset, relabel
from electgnn.models import Gevn, GevnConfig, load_checkpoint
from electgnn.train import (
    AdamState,
    AdversarialConfig,
    History,
    OptimConfig,
    adam_step,
    clip_grad_norm,
    global_norm,
    lr_at,
    params_digest,
    train_adversarial,
    train_mimic,
    train_welfare,
)

# reference curve of the 32-election smoke run below (frozen from its first run)
MIMIC32_LOSS = [
    1.2516291916108508,
    1.2502048455511732,
    1.2486226651171837,
    1.243948842667655,
    1.240739148897428,
    1.2380889722986645,
    1.2339284449977943,
    1.2265524191885768,
    1.2196877633956968,
    1.2150450413125062,
]

SMALL = GevnConfig(node_width=12, edge_width=6, layers=2, input_kind="cardinal")


# ---------------------------------------------------------------- schedule


def test_lr_schedule_landmarks():
    cfg = OptimConfig()
    assert lr_at(0, cfg) == pytest.approx(3e-5)
    assert lr_at(10, cfg) == pytest.approx(0.55 * 3e-4)
    for start in (20, 40, 80, 160):
        assert lr_at(start, cfg) == pytest.approx(3e-4)
    assert lr_at(30, cfg) == pytest.approx(1.5e-4)
    assert lr_at(60, cfg) == pytest.approx(1.5e-4)
    assert lr_at(39.999, cfg) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        lr_at(-1, cfg)


def test_lr_continuous_at_warmup_boundary():
    cfg = OptimConfig()
    assert lr_at(20 - 1e-9, cfg) == pytest.approx(lr_at(20, cfg), rel=1e-8)


@settings(max_examples=50)
@given(epoch=st.floats(0, 500))
def test_lr_within_bounds(epoch):
    assert 0.0 <= lr_at(epoch) <= 3e-4 + 1e-18


def test_optim_config_validation():
    for bad in [{"lr": 0}, {"beta1": 1.0}, {"warmup_start": 0}, {"batch_size": 0}, {"lr_floor": 1.0}]:
        with pytest.raises(ValueError):
            OptimConfig(**bad)


# -------------------------------------------------------------------- adam


def test_adam_first_step_moves_by_lr_times_sign():
    params = {"w": np.array([1.0, -2.0, 0.5])}
    grads = {"w": np.array([0.3, -0.01, 0.2])}
    state = AdamState()
    assert adam_step(params, grads, state, 0.1)
    np.testing.assert_allclose(params["w"], [0.9, -1.9, 0.4], rtol=1e-6)
    assert state.step == 1


def test_adam_zero_gradient_keeps_parameters():
    params = {"w": np.array([1.0, 2.0])}
    state = AdamState()
    adam_step(params, {"w": np.zeros(2)}, state, 0.1)
    np.testing.assert_array_equal(params["w"], [1.0, 2.0])
    assert state.step == 1


def test_gradient_clipped_to_unit_norm():
    grads = {"a": np.array([6.0, 0.0]), "b": np.array([0.0, 8.0])}
    clipped, norm = clip_grad_norm(grads, 1.0)
    assert norm == pytest.approx(10.0)
    assert global_norm(clipped) == pytest.approx(1.0)
    np.testing.assert_allclose(clipped["a"], [0.6, 0.0])


def test_adam_skips_non_finite_gradient():
    params = {"w": np.array([1.0])}
    state = AdamState()
    assert not adam_step(params, {"w": np.array([np.nan])}, state, 0.1)
    assert state.skipped == 1 and state.step == 0
    np.testing.assert_array_equal(params["w"], [1.0])


def test_adam_only_moves_given_parameters():
    params = {"a": np.array([1.0]), "b": np.array([1.0])}
    adam_step(params, {"a": np.array([1.0])}, AdamState(), 0.1)
    assert params["b"][0] == 1.0 and params["a"][0] != 1.0


# ----------------------------------------------------------------- history


def test_history_csv_round_trip(tmp_path):
    h = History()
    h.log(0, "train", "loss", 0.1 + 0.2)
    h.log(1, "val", "accuracy", 1 / 3)
    path = h.write_csv(tmp_path / "m.csv")
    assert path.read_text().splitlines()[0] == "epoch,split,metric,value"
    assert History.read_csv(path).rows == h.rows
    (tmp_path / "x.csv").write_text("a,b\n")
    with pytest.raises(ValueError):
        History.read_csv(tmp_path / "x.csv")


# -------------------------------------------------------------- supervised


@pytest.fixture(scope="module")
def tiny_borda():
    return label_dataset(DatasetSpec("dirichlet", (3, 10), (2, 5), 32, 0, "rule:borda"))


def test_mimic_smoke_curve(tiny_borda):
    result = train_mimic(tiny_borda, tiny_borda, "borda", optim=OptimConfig(epochs=10))
    losses = result.history.series("train", "loss")
    assert all(b < a for a, b in zip(losses, losses[1:]))
    np.testing.assert_allclose(losses, MIMIC32_LOSS, rtol=1e-7)


def test_checkpoint_reload_reproduces_accuracy(tmp_path, tiny_borda):
    path = tmp_path / "m.ckpt"
    result = train_mimic(tiny_borda, tiny_borda, "borda", SMALL, OptimConfig(epochs=3), checkpoint=path)
    model, meta = load_checkpoint(path)
    assert meta["best_epoch"] == result.best_epoch
    assert ev.accuracy(model, tiny_borda) == ev.accuracy(result.model, tiny_borda) == meta["best_value"]


def test_mimic_relabels_and_selects_best(tiny_borda):
    result = train_mimic(tiny_borda, tiny_borda, "plurality", SMALL, OptimConfig(epochs=4, patience=1))
    acc = result.history.series("val", "accuracy")
    assert result.best_value == max(acc)
    assert result.epochs_run <= 4


def test_welfare_training_improves_on_untrained():
    data = label_dataset(DatasetSpec("spatial", (3, 8), (2, 4), 128, 2, "welfare:utilitarian"))
    untrained = Gevn(SMALL)
    before = ev.expected_welfare(untrained, data, "utilitarian")
    result = train_welfare(data, data, input_kind="cardinal", model_config=SMALL, optim=OptimConfig(epochs=6, lr=3e-3))
    assert result.best_value >= before
    with pytest.raises(ValueError):
        train_welfare(data, data, loss="hinge")


def test_rule_variant_uses_welfare_winners():
    data = label_dataset(DatasetSpec("spatial", (3, 5), (2, 4), 16, 2, "rule:borda"))
    result = train_welfare(data, data, loss="rule", input_kind="ranking", optim=OptimConfig(epochs=1),
                           model_config=GevnConfig(node_width=8, edge_width=4, layers=1))
    welfare_labelled = relabel(data, "welfare:utilitarian")
    assert result.history.last("val", "accuracy") == ev.accuracy(result.model, welfare_labelled)
    assert result.history.last("val", "monotonicity") >= 0


# ------------------------------------------------------------- adversarial


@pytest.fixture(scope="module")
def spatial_small():
    return label_dataset(DatasetSpec("spatial", (3, 6), (2, 4), 48, 5, "welfare:utilitarian"))


def test_standard_freeze_leaves_voting_network_untouched(spatial_small):
    gevn = Gevn(SMALL)
    digest = params_digest(gevn)
    result = train_adversarial(spatial_small, spatial_small[:16], AdversarialConfig("standard-freeze"), gevn,
                               OptimConfig(epochs=2, batch_size=16))
    assert params_digest(result.gevn) == digest
    assert len(result.history.series("val", "welfare")) == 3


def test_robust_train_updates_voting_network(spatial_small):
    gevn = Gevn(SMALL)
    digest = params_digest(gevn)
    train_adversarial(spatial_small, spatial_small[:16], AdversarialConfig("robust-train"), gevn,
                      OptimConfig(epochs=1, batch_size=16))
    assert params_digest(gevn) != digest


def test_zero_fraction_gives_honest_constant_welfare(spatial_small):
    gevn = Gevn(SMALL)
    honest = ev.expected_welfare(gevn, spatial_small[:16], "utilitarian")
    result = train_adversarial(spatial_small, spatial_small[:16], AdversarialConfig("standard-freeze", fraction=0.0), gevn,
                               OptimConfig(epochs=2, batch_size=16))
    trace = result.history.series("val", "welfare")
    assert trace == pytest.approx([honest] * len(trace), abs=1e-12)


def test_adversarial_requires_pretrained(spatial_small):
    with pytest.raises(ValueError):
        train_adversarial(spatial_small, spatial_small, AdversarialConfig("robust-freeze"), None)
    with pytest.raises(ValueError):
        train_adversarial(spatial_small, spatial_small, AdversarialConfig("standard-freeze"), Gevn(GevnConfig(input_kind="ranking")))
    with pytest.raises(ValueError):
        AdversarialConfig(fraction=1.5)


def test_training_reports_finite_history(spatial_small):
    result = train_adversarial(spatial_small, spatial_small[:16], AdversarialConfig("standard-freeze", info="public"), Gevn(SMALL),
                               OptimConfig(epochs=1, batch_size=16))
    assert all(math.isfinite(v) for *_, v in result.history.rows)
