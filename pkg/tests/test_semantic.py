import numpy as np
import pytest
import torch

import oracles
from turbodsa.corpus import END, PAD, START
from turbodsa.errors import ContractViolation, InvalidTokenError
from turbodsa.semantic import (FeedForward, MultiHeadAttention, SemanticDecoder, SemanticEncoder,
                               causal_mask, greedy_decode, scaled_dot_product)


def _ids(b, L, vocab, seed=0):
    g = torch.Generator().manual_seed(seed)
    ids = torch.randint(4, vocab, (b, L), generator=g)
    ids[:, 0] = START
    lengths = torch.randint(3, L + 1, (b,), generator=g)
    for i, n in enumerate(lengths.tolist()):
        ids[i, n - 1] = END
        ids[i, n:] = PAD
    return ids


class TestAttention:
    def test_single_head_identity_single_token(self, double_precision):
        mha = MultiHeadAttention(3, 1)
        for lin in (mha.w_q, mha.w_k, mha.w_v, mha.w_o):
            lin.weight.data = torch.eye(3)
        x = torch.randn(2, 1, 3)
        torch.testing.assert_close(mha(x), x, rtol=0, atol=1e-15)

    def test_softmax_rows_sum_to_one(self):
        mha = MultiHeadAttention(16, 4)
        mha(torch.randn(3, 7, 16))
        sums = mha.last_weights.sum(-1)
        assert torch.allclose(sums, torch.ones_like(sums), atol=1e-6)

    def test_masked_positions_get_zero_weight(self):
        mha = MultiHeadAttention(8, 2)
        mask = causal_mask(5)
        mha(torch.randn(2, 5, 8), mask=mask)
        assert float(mha.last_weights[..., mask].abs().max()) <= 1e-9

    def test_two_token_matches_scalar_oracle(self, double_precision):
        torch.manual_seed(1)
        mha = MultiHeadAttention(2, 1)
        x = torch.randn(1, 2, 2)
        got = mha(x)[0].tolist()
        w = [lin.weight.detach().T.tolist() for lin in (mha.w_q, mha.w_k, mha.w_v, mha.w_o)]
        want = oracles.attention(x[0].tolist(), *w, num_heads=1)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)

    def test_multihead_masked_matches_scalar_oracle(self, double_precision):
        torch.manual_seed(2)
        mha = MultiHeadAttention(6, 3)
        x = torch.randn(1, 4, 6)
        mask = causal_mask(4)
        got = mha(x, mask=mask)[0].tolist()
        w = [lin.weight.detach().T.tolist() for lin in (mha.w_q, mha.w_k, mha.w_v, mha.w_o)]
        want = oracles.attention(x[0].tolist(), *w, num_heads=3, mask=mask.tolist())
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)

    def test_head_count_must_divide(self):
        with pytest.raises(ContractViolation):
            MultiHeadAttention(10, 3)

    def test_width_mismatch(self):
        with pytest.raises(ContractViolation):
            MultiHeadAttention(8, 2)(torch.randn(1, 2, 6))

    def test_gradient_matches_finite_differences(self, double_precision):
        torch.manual_seed(3)
        mha = MultiHeadAttention(4, 2)
        x = torch.randn(2, 3, 4, requires_grad=True)
        target = torch.randn(2, 3, 4)
        loss = lambda: ((mha(x) - target) ** 2).sum()
        loss().backward()
        for t in [x] + list(mha.parameters()):
            num = oracles.central_difference(loss, t)
            assert oracles.relative_error(t.grad, num) <= 1e-4


class TestFeedForward:
    def test_zero_weights_give_zero(self):
        ff = FeedForward(4, 8)
        torch.nn.init.zeros_(ff.linear1.weight)
        torch.nn.init.zeros_(ff.linear1.bias)
        torch.nn.init.zeros_(ff.linear2.bias)
        assert torch.count_nonzero(ff(torch.randn(2, 3, 4))) == 0

    def test_dead_relu_returns_bias(self):
        ff = FeedForward(4, 8)
        with torch.no_grad():
            ff.linear1.weight.zero_()
            ff.linear1.bias.fill_(-1.0)
        out = ff(torch.randn(2, 3, 4))
        torch.testing.assert_close(out, ff.linear2.bias.expand_as(out))

    def test_matches_scalar_oracle(self, double_precision):
        torch.manual_seed(4)
        ff = FeedForward(3, 5)
        x = torch.randn(1, 4, 3)
        want = oracles.feed_forward(x[0].tolist(), ff.linear1.weight.T.tolist(), ff.linear1.bias.tolist(),
                                    ff.linear2.weight.T.tolist(), ff.linear2.bias.tolist())
        np.testing.assert_allclose(ff(x)[0].tolist(), want, rtol=0, atol=1e-9)

    def test_gradient_matches_finite_differences(self, double_precision):
        torch.manual_seed(5)
        ff = FeedForward(4, 6)
        x = torch.randn(2, 3, 4, requires_grad=True)
        loss = lambda: ff(x).sin().sum()
        loss().backward()
        for t in [x] + list(ff.parameters()):
            assert oracles.relative_error(t.grad, oracles.central_difference(loss, t)) <= 1e-4


class TestEncoder:
    def test_embed_all_pad_rows(self):
        enc = SemanticEncoder(20, d_model=16, num_layers=1, num_heads=2, d_ff=32, max_len=6)
        ids = torch.zeros(3, 6, dtype=torch.long)
        out = enc.embed(ids)
        want = enc.embed.table.weight[PAD] + enc.embed.positions[:6]
        torch.testing.assert_close(out, want.expand(3, 6, 16))

    def test_invalid_id(self):
        enc = SemanticEncoder(10, d_model=8, num_layers=1, num_heads=2, d_ff=8, max_len=4)
        with pytest.raises(InvalidTokenError, match="invalid token id"):
            enc(torch.tensor([[START, 10, END, PAD]]))

    def test_identical_rows_identical_outputs(self):
        enc = SemanticEncoder(30, d_model=16, num_layers=2, num_heads=4, d_ff=32, max_len=8).eval()
        ids = _ids(1, 8, 30).repeat(2, 1)
        out = enc(ids)
        assert torch.equal(out[0], out[1])

    def test_batch_equivariance_and_purity(self):
        enc = SemanticEncoder(30, d_model=16, num_layers=3, num_heads=4, d_ff=32, max_len=8).eval()
        ids = _ids(6, 8, 30)
        perm = torch.randperm(6)
        out = enc(ids)
        torch.testing.assert_close(enc(ids[perm]), out[perm])
        assert torch.equal(enc(ids), out)

    def test_finite_over_many_trials(self):
        enc = SemanticEncoder(50, d_model=16, num_layers=3, num_heads=4, d_ff=32, max_len=10).eval()
        with torch.no_grad():
            for trial in range(1000):
                assert torch.isfinite(enc(_ids(2, 10, 50, seed=trial))).all()

    def test_default_shape(self):
        enc = SemanticEncoder(100, max_len=30).eval()
        assert len(enc.layers) == 3
        with torch.no_grad():
            assert enc(_ids(4, 30, 100)).shape == (4, 30, 128)


class TestDecoder:
    def _dec(self):
        torch.manual_seed(0)
        return SemanticDecoder(25, d_model=16, num_layers=2, num_heads=4, d_ff=32, max_len=8).eval()

    def test_distributions_sum_to_one(self):
        dec = self._dec()
        p = dec.probabilities(torch.randn(3, 8, 16), _ids(3, 8, 25))
        assert p.shape == (3, 8, 25)
        torch.testing.assert_close(p.sum(-1), torch.ones(3, 8), atol=1e-6, rtol=0)

    def test_causality(self):
        dec = self._dec()
        d = torch.randn(2, 8, 16)
        ids = _ids(2, 8, 25)
        base = dec.probabilities(d, ids)
        for t in range(1, 8):
            other = ids.clone()
            other[:, t] = (other[:, t] + 7) % 25
            p = dec.probabilities(d, other)
            assert (p[:, :t] - base[:, :t]).abs().max() <= 1e-6

    def test_rejects_non_finite(self):
        dec = self._dec()
        d = torch.randn(1, 8, 16)
        d[0, 0, 0] = float("nan")
        with pytest.raises(ContractViolation):
            dec(d, _ids(1, 8, 25))

    def test_greedy_uniform_logits_tie_break(self):
        dec = self._dec()
        with torch.no_grad():
            dec.out.weight.zero_()
            dec.out.bias.zero_()
        out = greedy_decode(dec, torch.randn(3, 8, 16), 8)
        # every logit ties, so argmax picks id 0 (PAD) at every step; last slot forced to END
        assert (out == out[0]).all()
        assert out[0].tolist() == [START, PAD, PAD, PAD, PAD, PAD, PAD, END]

    def test_greedy_rows_independent(self):
        dec = self._dec()
        d = torch.randn(5, 8, 16)
        perm = torch.tensor([3, 0, 4, 1, 2])
        assert torch.equal(greedy_decode(dec, d[perm], 8), greedy_decode(dec, d, 8)[perm])

    def test_greedy_stops_at_end(self):
        dec = self._dec()
        with torch.no_grad():
            dec.out.weight.zero_()
            dec.out.bias.zero_()
            dec.out.bias[END] = 1.0
        assert greedy_decode(dec, torch.randn(2, 8, 16), 8)[0].tolist() == [START, END] + [PAD] * 6


def test_scaled_dot_product_rows():
    q = torch.randn(2, 3, 4)
    _, w = scaled_dot_product(q, torch.randn(2, 5, 4), torch.randn(2, 5, 4))
    assert torch.allclose(w.sum(-1), torch.ones(2, 3), atol=1e-6)
