import math

import pytest
import torch

from articodec.vocoder import DiscriminatorBank, DiscriminatorConfig, period_frames
from articodec.vocoder.discriminator import _fold_periodic, _scale_pool


@pytest.fixture(scope="module")
def tiny_bank():
    torch.manual_seed(0)
    return DiscriminatorBank(DiscriminatorConfig.tiny())


class TestPeriodReshape:
    @pytest.mark.parametrize("length,period", [(100, 2), (101, 2), (5120, 11),
                                               (99, 7)])
    def test_shape_contract(self, length, period):
        p, frames = period_frames(length, period)
        assert p == period
        assert frames == math.ceil(length / period)
        folded = _fold_periodic(torch.randn(1, 1, length), period)
        assert folded.shape == (1, 1, frames, period)

    def test_even_length_no_padding(self):
        x = torch.arange(8.0)[None, None, :]
        folded = _fold_periodic(x, 2)
        assert torch.equal(folded[0, 0, :, 0], torch.tensor([0.0, 2.0, 4.0, 6.0]))
        assert torch.equal(folded[0, 0, :, 1], torch.tensor([1.0, 3.0, 5.0, 7.0]))


class TestScalePooling:
    @pytest.mark.parametrize("length,scale", [(100, 1), (100, 2), (101, 2),
                                              (5120, 4), (103, 4)])
    def test_pooled_length(self, length, scale):
        out = _scale_pool(torch.randn(1, 1, length), scale)
        assert out.shape[-1] == math.ceil(length / scale)

    def test_scale_one_is_identity(self):
        x = torch.randn(1, 1, 64)
        assert torch.equal(_scale_pool(x, 1), x)

    def test_scale_two_averages_pairs(self):
        x = torch.arange(6.0)[None, None, :]
        out = _scale_pool(x, 2)
        assert torch.equal(out[0, 0], torch.tensor([0.5, 2.5, 4.5]))


class TestBank:
    def test_eight_discriminators(self, tiny_bank):
        outs = tiny_bank(torch.randn(1, 5120))
        assert len(outs) == 8  # 5 period + 3 scale
        for score, feats in outs:
            assert score.dim() == 2
            assert len(feats) >= 4

    def test_deterministic(self, tiny_bank):
        tiny_bank.eval()
        x = torch.randn(1, 3200)
        with torch.no_grad():
            a = tiny_bank(x)
            b = tiny_bank(x)
        for (sa, _), (sb, _) in zip(a, b):
            assert torch.equal(sa, sb)

    def test_parameters_disjoint_from_generator(self, tiny_bank):
        from articodec.vocoder import Generator, GeneratorConfig

        gen = Generator(GeneratorConfig(base_channels=16, film_hidden=8))
        gen_ids = {id(p) for p in gen.parameters()}
        bank_ids = {id(p) for p in tiny_bank.parameters()}
        assert gen_ids.isdisjoint(bank_ids)
