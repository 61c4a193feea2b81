from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voroshot.data import (
    EpisodeSpec, FeatureBank, SplitMix64, SyntheticSpec, View, gen_synthetic, iter_episodes,
    load_bank, read_manifest, sample_episode, sample_indices, save_bank, write_manifest,
)
from voroshot.data.sampling import partial_shuffle
from voroshot.errors import BankFormatError, DataError

from conftest import toy_bank

# SplitMix64 outputs for seed 1234567, computed with the oracle below and with an
# independent C build of the same recurrence
SEED_1234567 = (18096817998785215621, 14059658067998936997, 2205282657384430711)
GOLDEN_CLASSES_SEED42 = (4, 3, 2, 13, 5)


class OracleSplitMix:
    """Straight numpy-uint64 transcription of the recurrence, wrapping arithmetic."""

    def __init__(self, seed):
        self.s = np.uint64(seed)

    def next(self):
        with np.errstate(over="ignore"):
            self.s = self.s + np.uint64(0x9E3779B97F4A7C15)
            z = self.s
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D649BB133111EB)
            return int(z ^ (z >> np.uint64(31)))

    def below(self, n):
        while True:
            m = self.next() * n
            if (m % 2 ** 64) >= (2 ** 64 - n) % n:
                return m // 2 ** 64


def oracle_classes(classes, ways, seed):
    rng = OracleSplitMix(seed)
    a = list(classes)
    for i in range(ways):
        j = i + rng.below(len(a) - i)
        a[i], a[j] = a[j], a[i]
    return tuple(a[:ways])


def test_splitmix_reference_vector():
    rng = SplitMix64(1234567)
    assert tuple(rng.next_u64() for _ in range(3)) == SEED_1234567


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 64 - 1))
def test_splitmix_matches_oracle(seed):
    a, b = SplitMix64(seed), OracleSplitMix(seed)
    for _ in range(4):
        assert a.next_u64() == b.next()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(1, 1000))
def test_bounded_draw_matches_oracle(seed, n):
    a, b = SplitMix64(seed), OracleSplitMix(seed)
    for _ in range(3):
        x = a.below(n)
        assert x == b.below(n) and 0 <= x < n


def test_golden_class_tuple():
    bank = toy_bank()
    spec = EpisodeSpec(ways=5, shots=1, queries=2, episodes=1, seed=42)
    classes, _, _ = sample_indices(bank, spec, 0)
    assert classes == oracle_classes(range(20), 5, 42 ^ 0)
    assert classes == GOLDEN_CLASSES_SEED42


def test_partial_shuffle_is_permutation_prefix():
    out = partial_shuffle(list(range(10)), 4, SplitMix64(0))
    assert len(out) == 4 and len(set(out)) == 4


def test_episode_contract(small_banks, small_spec):
    novel = small_banks[1]
    for i in range(10):
        ep = sample_episode(novel, small_spec, i)
        assert len(set(ep.classes)) == small_spec.ways
        assert not set(ep.support_index) & set(ep.query_index)
        for k, cls in enumerate(ep.classes):
            assert np.all(novel.labels[ep.support_index[ep.support_labels == k]] == cls)
            assert np.all(novel.labels[ep.query_index[ep.query_labels == k]] == cls)


def test_episode_determinism_and_order_independence(small_banks, small_spec):
    novel = small_banks[1]
    forward = [sample_episode(novel, small_spec, i) for i in range(6)]
    backward = [sample_episode(novel, small_spec, i) for i in reversed(range(6))][::-1]
    for a, b in zip(forward, backward):
        assert a.classes == b.classes
        assert np.array_equal(a.support_views, b.support_views)
        assert np.array_equal(a.query_index, b.query_index)
    assert len(list(iter_episodes(novel, small_spec))) == small_spec.episodes


def test_spec_mismatch(small_banks):
    novel = small_banks[1]
    with pytest.raises(DataError):
        sample_episode(novel, EpisodeSpec(ways=50), 0)
    with pytest.raises(DataError):
        sample_episode(novel, EpisodeSpec(shots=10, queries=15), 0)
    with pytest.raises(ValueError):
        EpisodeSpec(ways=0)


def test_bank_invariants():
    v = (View(0),)
    with pytest.raises(DataError):
        FeatureBank(np.zeros((1, 2, 3)), [0, 5], 2, v)
    with pytest.raises(DataError):
        FeatureBank(np.full((1, 2, 3), np.nan), [0, 1], 2, v)
    with pytest.raises(DataError):
        FeatureBank(np.zeros((2, 2, 3)), [0, 1], 2, v)
    with pytest.raises(DataError):
        FeatureBank(np.zeros((2, 2, 3)), [0, 1], 2, (View(0), View(0)))
    with pytest.raises(DataError):
        FeatureBank(np.zeros((1, 2, 3)), [0, 1], 2, v, split="train")
    with pytest.raises(DataError):
        View(0, "two\nlines")
    b = FeatureBank(np.zeros((1, 2, 3)), [0, 1], 2, v)
    with pytest.raises(ValueError):
        b.features[0, 0, 0] = 1.0


@pytest.mark.parametrize("suffix", [".vbk", ".txt"])
def test_round_trip(tmp_path, small_banks, suffix):
    bank = small_banks[0]
    path = tmp_path / f"bank{suffix}"
    save_bank(bank, path)
    loaded = load_bank(path)
    assert loaded.same_as(bank)
    save_bank(bank, tmp_path / f"again{suffix}")
    assert path.read_bytes() == (tmp_path / f"again{suffix}").read_bytes()


def test_text_binary_conversion_preserves_values(tmp_path, small_banks):
    bank = small_banks[1]
    save_bank(bank, tmp_path / "a.txt")
    save_bank(load_bank(tmp_path / "a.txt"), tmp_path / "b.vbk")
    assert load_bank(tmp_path / "b.vbk").same_as(bank)
    line = (tmp_path / "a.txt").read_text().splitlines()[3]
    assert all(len(tok.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 9
               for tok in line.split()[1:])


def test_binary_size_is_computable(tmp_path):
    bank = toy_bank(n_classes=3, per_class=2, dim=4)
    save_bank(bank, tmp_path / "t.vbk")
    size = 4 + 2 + 4 * 4 + 1 + (4 + 2 + len("toy")) + 4 * 6 + 4 * 6 * 4
    assert (tmp_path / "t.vbk").stat().st_size == size


def test_truncated_binary(tmp_path, small_banks):
    path = tmp_path / "t.vbk"
    save_bank(small_banks[0], path)
    data = path.read_bytes()
    path.write_bytes(data[:-10])
    with pytest.raises(BankFormatError, match=f"expected {len(data)} bytes, got {len(data) - 10}"):
        load_bank(path)


def test_minimal_text_fixture(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("VOROBANK1 1 2 1 1 novel\nview 0 identity\n0 0.5 1.5\n")
    bank = load_bank(path)
    assert bank.dim == 2 and bank.n_samples == 1
    assert np.array_equal(bank.features[0], [[0.5, 1.5]])


@pytest.mark.parametrize("text", [
    "VOROBANK2 1 2 1 1 novel\nview 0 identity\n0 0.5 1.5\n",
    "VOROBANK1 1 2 1 1 novel\nview 0 identity\n0 0.5\n",
    "VOROBANK1 1 2 1 1 novel\nview 0 identity\n0 0.5 abc\n",
    "VOROBANK1 2 2 1 1 novel\nview 0 identity\n0 0.5 1.5\n",
])
def test_malformed_text(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(DataError):
        load_bank(path)


def test_bad_magic(tmp_path):
    (tmp_path / "x.vbk").write_bytes(b"NOPE0000")
    with pytest.raises(BankFormatError):
        load_bank(tmp_path / "x.vbk")


def test_manifest(tmp_path):
    write_manifest(tmp_path / "manifest.json", "toy", {"novel": "n.vbk"}, "made up")
    doc = read_manifest(tmp_path / "manifest.json")
    assert doc["name"] == "toy"
    assert doc["splits"]["novel"] == str((tmp_path / "n.vbk").resolve())


def test_synthetic_determinism(tmp_path):
    spec = SyntheticSpec(dim=8, samples_per_class=10, seed=3)
    for (a, b) in zip(gen_synthetic(spec), gen_synthetic(spec)):
        save_bank(a, tmp_path / "a.vbk")
        save_bank(b, tmp_path / "b.vbk")
        assert (tmp_path / "a.vbk").read_bytes() == (tmp_path / "b.vbk").read_bytes()


def test_synthetic_properties():
    spec = SyntheticSpec(dim=8, samples_per_class=10, seed=1, n_views=3, view_jitter=0.2,
                         shuffled_views=(2,))
    base, novel, val = gen_synthetic(spec)
    assert (base.split, novel.split, val.split) == ("base", "novel", "validation")
    assert base.n_classes == 20 and novel.n_classes == 10 and val.n_classes == 10
    for b in (base, novel, val):
        assert np.all(b.features > 0)
        assert b.n_views == 3
        assert all("synthetic" in v.provenance for v in b.views)
    assert "shuffled" in novel.views[2].provenance
    assert SyntheticSpec.from_dict(spec.to_dict()) == spec


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(noise=0.0)
    with pytest.raises(ValueError):
        SyntheticSpec(mix=30)
    with pytest.raises(ValueError):
        SyntheticSpec.from_dict({"bogus": 1})
