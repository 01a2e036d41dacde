import numpy as np
import pytest
import torch

from loadfill.discriminator import Discriminator, DiscConfig, default_disc_layers
from loadfill.generator import (
    Generator,
    GeneratorConfig,
    default_coarse_layers,
    default_fine_layers,
    inpaint,
    pack_input,
    splice,
)
from loadfill.layers import LayerSpec


@pytest.fixture(scope="module")
def tiny_gen():
    return Generator(GeneratorConfig.scaled(8), seed=0)


@pytest.fixture(scope="module")
def tiny_disc():
    return Discriminator(DiscConfig.scaled(4), seed=1)


class TestGeneratorStructure:
    def test_published_coarse_table(self):
        specs = default_coarse_layers()
        kinds = [s.kind for s in specs]
        assert kinds == ["gc", "gc", "gc", "gc", "gc", "gtc", "gc", "gtc", "gc"]
        assert [s.kernel_size for s in specs] == [5, 4, 3, 4, 3, 3, 3, 3, 3]
        assert [s.out_channels for s in specs] == [64, 128, 128, 256, 256, 128, 128, 64, 1]
        assert [s.stride for s in specs] == [1, 2, 1, 2, 1, 2, 1, 2, 1]

    def test_fine_table_mirrors_coarse_with_attention_bottleneck(self):
        specs = default_fine_layers()
        assert sum(1 for s in specs if s.kind == "attention") == 4
        # attention sits at the 256-channel bottleneck
        i = next(i for i, s in enumerate(specs) if s.kind == "attention")
        assert specs[i - 1].out_channels == 256
        assert specs[-1].out_channels == 1

    def test_stride_balance_enforced(self):
        bad = default_coarse_layers()[:-2] + [LayerSpec("gc", 3, 1, 1)]
        with pytest.raises(ValueError, match="window length"):
            GeneratorConfig(coarse_layers=bad, fine_layers=default_fine_layers())

    def test_attention_count_enforced(self):
        fine = [s for s in default_fine_layers() if s.kind != "attention"]
        with pytest.raises(ValueError, match="attention"):
            GeneratorConfig(fine_layers=fine)

    def test_config_round_trip(self):
        cfg = GeneratorConfig.scaled(8)
        again = GeneratorConfig.from_dict(cfg.to_dict())
        assert again.to_dict() == cfg.to_dict()


class TestGeneratorForward:
    @pytest.mark.parametrize("w", [32, 96, 288])
    def test_window_length_preserved(self, tiny_gen, w):
        z = torch.randn(2, 3, w)
        out = tiny_gen(z)
        assert out.stage1.shape == (2, 1, w)
        assert out.stage2.shape == (2, 1, w)
        assert torch.isfinite(out.stage1).all() and torch.isfinite(out.stage2).all()

    def test_zero_parameters_zero_output(self):
        gen = Generator(GeneratorConfig.scaled(8), seed=2)
        with torch.no_grad():
            for p in gen.parameters():
                p.zero_()
        out = gen(torch.randn(1, 3, 32))
        assert torch.all(out.stage1 == 0) and torch.all(out.stage2 == 0)

    def test_wrong_channel_count_rejected(self, tiny_gen):
        with pytest.raises(ValueError, match="channels"):
            tiny_gen(torch.randn(1, 2, 32))

    def test_deterministic_forward(self, tiny_gen):
        z = torch.randn(1, 3, 96)
        a = tiny_gen(z)
        b = tiny_gen(z)
        np.testing.assert_array_equal(a.stage2.detach().numpy(), b.stage2.detach().numpy())

    def test_variable_mask_lengths_one_parameter_set(self, tiny_gen, small_sample_set):
        lengths = set()
        for s in small_sample_set.train[:20]:
            est = inpaint(tiny_gen, s, small_sample_set.stats)
            assert len(est) == s.event.length_steps
            assert np.isfinite(est).all()
            lengths.add(s.event.length_steps)
        assert len(lengths) > 1, "fixture should contain several mask lengths"

    def test_masked_input_values_cannot_leak(self, tiny_gen, small_sample_set):
        # what was originally under the mask is zeroed, so inpainting cannot
        # depend on it: perturbing the stored truth changes nothing
        s = small_sample_set.train[0]
        est1 = inpaint(tiny_gen, s, small_sample_set.stats)
        truth = s.truth_event.copy()
        s.truth_event = truth + 123.0
        est2 = inpaint(tiny_gen, s, small_sample_set.stats)
        s.truth_event = truth
        np.testing.assert_array_equal(est1, est2)

    def test_pack_input_layout(self, small_sample_set):
        s = small_sample_set.train[0]
        z = pack_input(s)
        assert z.shape == (1, 3, s.window_len)
        np.testing.assert_array_equal(z[0, 2].numpy(), s.mask.astype(np.float32))


class TestSplice:
    def test_zero_mask_returns_observed(self):
        obs, gen = torch.randn(2, 1, 8), torch.randn(2, 1, 8)
        np.testing.assert_array_equal(splice(obs, gen, torch.zeros(2, 1, 8)).numpy(), obs.numpy())

    def test_full_mask_returns_generated(self):
        obs, gen = torch.randn(2, 1, 8), torch.randn(2, 1, 8)
        np.testing.assert_array_equal(splice(obs, gen, torch.ones(2, 1, 8)).numpy(), gen.numpy())

    def test_half_mask_hand_case(self):
        obs = torch.tensor([[[1.0, 1.0, 1.0, 1.0]]])
        gen = torch.tensor([[[2.0, 2.0, 2.0, 2.0]]])
        mask = torch.tensor([[[0.0, 0.0, 1.0, 1.0]]])
        np.testing.assert_allclose(splice(obs, gen, mask)[0, 0].numpy(), [1, 1, 2, 2])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shapes"):
            splice(torch.randn(1, 1, 8), torch.randn(1, 1, 6), torch.zeros(1, 1, 8))


class TestDiscriminator:
    def test_score_width_rule(self, tiny_disc):
        # M = out_channels * ceil(W / 32)
        out = tiny_disc(torch.randn(2, 1, 96), torch.zeros(2, 1, 96))
        assert out.scores.shape == (2, tiny_disc.score_width(96))
        full = Discriminator(seed=0)
        assert full.score_width(96) == 768
        assert full.score_width(32) == 256
        assert full.score_width(288) == 256 * 9

    def test_four_feature_taps(self, tiny_disc):
        out = tiny_disc(torch.randn(1, 1, 64), torch.zeros(1, 1, 64))
        assert len(out.features) == 4
        times = [f.shape[-1] for f in out.features]
        assert times == [32, 16, 8, 4]

    def test_zero_parameters_zero_scores(self):
        disc = Discriminator(DiscConfig.scaled(4), seed=5)
        with torch.no_grad():
            for p in disc.parameters():
                p.zero_()
        out = disc(torch.randn(1, 1, 32), torch.zeros(1, 1, 32))
        assert torch.all(out.scores == 0)

    def test_deterministic(self, tiny_disc):
        tiny_disc.eval()
        x, m = torch.randn(1, 1, 96), torch.zeros(1, 1, 96)
        a, b = tiny_disc(x, m), tiny_disc(x, m)
        np.testing.assert_array_equal(a.scores.detach().numpy(), b.scores.detach().numpy())

    def test_length_mismatch_rejected(self, tiny_disc):
        with pytest.raises(ValueError, match="length"):
            tiny_disc(torch.randn(1, 1, 96), torch.zeros(1, 1, 64))

    def test_config_requires_five_sn_layers(self):
        with pytest.raises(ValueError, match="5 layers"):
            DiscConfig(layers=default_disc_layers()[:4])

    def test_all_layers_spectral_normalized(self, tiny_disc):
        assert len(tiny_disc.sn_layers()) == 5
