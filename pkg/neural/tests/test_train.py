import math

import pytest
import torch

from inpaint_neural import (
    LOG_COLUMNS,
    MaskedCorpus,
    SyntheticCorpus,
    TrainConfig,
    TrainingDivergedError,
    train_mask_net,
    train_tonal_net,
    write_log,
)

TINY = TrainConfig(density=0.1, epochs=2, batch_size=4, learning_rate=1e-4,
                   base_width=8, rng_seed=3)


@pytest.fixture(scope="module")
def tiny_sets():
    return SyntheticCorpus(8, 64, start=0), SyntheticCorpus(4, 64, start=100)


class TestMaskTraining:
    @pytest.mark.parametrize("variant", ["nonbinary", "quantise", "coinflip"])
    def test_variants_run_and_log(self, tiny_sets, variant, tmp_path):
        train_set, val_set = tiny_sets
        log_path = tmp_path / "log.csv"
        result = train_mask_net(train_set, val_set, TINY, variant=variant,
                                log_path=log_path)
        assert len(result.log) == TINY.epochs
        assert result.best_epoch >= 0
        assert result.model_state and result.surrogate_state
        header = log_path.read_text().splitlines()[0]
        assert header == ",".join(LOG_COLUMNS)
        for row in result.log:
            assert all(math.isfinite(row[c]) for c in LOG_COLUMNS if c != "epoch")

    def test_rejects_unknown_variant(self, tiny_sets):
        train_set, val_set = tiny_sets
        with pytest.raises(ValueError):
            train_mask_net(train_set, val_set, TINY, variant="ternary")

    def test_divergence_aborts_with_epoch(self, tiny_sets):
        train_set, val_set = tiny_sets
        bad = TrainConfig(density=0.1, epochs=1, batch_size=4, learning_rate=1e10,
                          base_width=8, rng_seed=3)
        with pytest.raises(TrainingDivergedError) as err:
            train_mask_net(train_set, val_set, bad, variant="nonbinary")
        assert err.value.epoch == 0


class TestTonalTraining:
    def test_runs_and_selects_a_model(self):
        train_set = MaskedCorpus(8, density=0.1, size=64, start=0)
        val_set = MaskedCorpus(4, density=0.1, size=64, start=100)
        result = train_tonal_net(train_set, val_set, TINY)
        assert len(result.log) == TINY.epochs
        assert result.best_val_loss < math.inf

    def test_masked_corpus_is_deterministic(self):
        a = MaskedCorpus(4, density=0.1, size=64, start=0)
        b = MaskedCorpus(4, density=0.1, size=64, start=0)
        for i in range(4):
            fa, ca = a[i]
            fb, cb = b[i]
            assert torch.equal(fa, fb) and torch.equal(ca, cb)
            assert abs(float(ca.mean()) - 0.1) < 0.005


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(density=0.0)
    with pytest.raises(ValueError):
        TrainConfig(crop_size=96)
    with pytest.raises(ValueError):
        TrainConfig(epsilon=0.0)


def test_mask_loss_composition_by_variant():
    # Non-binary and coin-flip variants regularise with the inverse variance
    # plus the density deviation; the quantise variant uses density alone.
    from inpaint_neural.losses import loss_mask_density, loss_mask_variance
    from inpaint_neural.train import _mask_loss

    config = TrainConfig(density=0.1, alpha=1e-4)
    confidence = torch.rand(2, 1, 8, 8, dtype=torch.float64) * 0.4
    used = (confidence > 0.2).to(torch.float64)
    combined = float(loss_mask_variance(confidence, config.alpha, config.epsilon)
                     + loss_mask_density(confidence, config.density))
    assert float(_mask_loss(confidence, used, "nonbinary", config)) == pytest.approx(combined)
    assert float(_mask_loss(confidence, used, "coinflip", config)) == pytest.approx(combined)
    density_only = float(loss_mask_density(used, config.density))
    assert float(_mask_loss(confidence, used, "quantise", config)) == pytest.approx(density_only)


def test_write_log_format(tmp_path):
    rows = [{"epoch": 0, "loss_inpaint": 0.5, "loss_residual": 0.1,
             "loss_mask": 0.01, "val_psnr": 12.0}]
    write_log(rows, tmp_path / "log.csv")
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == "epoch,loss_inpaint,loss_residual,loss_mask,val_psnr"
    assert lines[1].startswith("0,0.5,0.1,0.01,12")
