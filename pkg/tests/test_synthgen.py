import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from keystress.errors import InvalidProfile
from keystress.features import BIGRAMS, TRIGRAMS, extract_matrix, ngram_occurrences, presses
from keystress.synthgen import TypistProfile, generate_dataset, generate_session, write_dataset


def dwell_separation(matrix, min_coverage=0.9):
    """Distance between class centroids over well-populated dwell features,
    each feature scaled by its pooled within-class standard deviation."""
    y = np.array([label == "stress" for label in matrix.labels])
    total = 0.0
    used = []
    for i, name in enumerate(matrix.names):
        if not name.endswith("_dwell"):
            continue
        col = matrix.X[:, i]
        a, b = col[~y & ~np.isnan(col)], col[y & ~np.isnan(col)]
        if len(a) < min_coverage * (~y).sum() or len(b) < min_coverage * y.sum():
            continue
        pooled = math.sqrt(((len(a) - 1) * a.var(ddof=1) + (len(b) - 1) * b.var(ddof=1)) / (len(a) + len(b) - 2))
        total += ((a.mean() - b.mean()) / pooled) ** 2
        used.append(name)
    return math.sqrt(total), used


def key_dwells(session):
    return [p.dwell for p in presses(session) if p.code != "shift" and not p.code.startswith("mouse")]


class TestSession:
    def test_speedup_one_is_identity(self):
        p = TypistProfile(speedup=1.0)
        a = generate_session(p, True, 300, seed=5)
        b = generate_session(p, False, 300, seed=5)
        assert a.events == b.events

    def test_deterministic(self):
        p = TypistProfile()
        assert generate_session(p, True, 200, seed=8) == generate_session(p, True, 200, seed=8)
        assert generate_session(p, True, 200, seed=8).events != generate_session(p, True, 200, seed=9).events

    @pytest.mark.parametrize("is_stress", [False, True])
    def test_mean_dwell_law_of_large_numbers(self, is_stress):
        p = TypistProfile(dwell_mean_ms=80.0)
        s = generate_session(p, is_stress, 10_000, seed=3)
        expected = 80.0 / (p.speedup if is_stress else 1.0)
        assert abs(np.mean(key_dwells(s)) - expected) <= 0.03 * expected

    @pytest.mark.parametrize("seed", range(5))
    def test_ngram_coverage(self, seed):
        s = generate_session(TypistProfile(), seed % 2 == 1, 500, seed=seed)
        missing = [g for g in BIGRAMS + TRIGRAMS if not ngram_occurrences(s, g)]
        assert missing == []

    def test_target_keys(self):
        s = generate_session(TypistProfile(), False, 250, seed=1)
        kbd = [p for p in presses(s) if not p.code.startswith("mouse")]
        assert len(kbd) >= 250

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.45), st.floats(0.5, 30.0), st.booleans())
    def test_emitted_stream_needs_no_repair(self, seed, p_roll, factor, is_stress):
        rates = {k: v * factor for k, v in TypistProfile().special_key_rates.items()}
        p = TypistProfile(p_roll=p_roll, special_key_rates=rates, click_rate=6 * factor, speedup=2.0)
        s = generate_session(p, is_stress, 120, seed=seed)
        assert s.summary.repaired == 0

    def test_error_rate_factor_raises_specials(self):
        p = TypistProfile(error_rate_factor=4.0, speedup=1.0)
        normal = generate_session(p, False, 5000, seed=2)
        stress = generate_session(p, True, 5000, seed=2)
        count = lambda s: sum(1 for x in presses(s) if x.code == "backspace")
        assert count(stress) > 2 * count(normal)

    @pytest.mark.parametrize("change", [{"dwell_mean_ms": 0}, {"interval_sigma": -1}, {"p_roll": 0.5},
                                        {"speedup": 0}, {"words": ()}, {"click_rate": -1.0}])
    def test_invalid_profile(self, change):
        with pytest.raises(InvalidProfile):
            generate_session(replace(TypistProfile(), **change), False, 100)

    def test_too_few_keys(self):
        with pytest.raises(InvalidProfile):
            generate_session(TypistProfile(), False, 19)


class TestDataset:
    def test_counts_and_labels(self):
        sessions = generate_dataset(3, 4, target_keys=60, seed=1)
        assert [s.label for s in sessions] == ["normal"] * 3 + ["stress"] * 4
        assert len({s.id for s in sessions}) == 7

    def test_invalid(self):
        with pytest.raises(InvalidProfile):
            generate_dataset(0, 5)
        with pytest.raises(InvalidProfile):
            generate_dataset(5, 5, separation=0.9)

    def test_byte_identical_files(self, tmp_path):
        for name in ("a", "b"):
            write_dataset(generate_dataset(4, 4, target_keys=80, seed=11), tmp_path / name, {"seed": 11})
        files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        assert len(files) == 9
        for f in files:
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_default_separation_exceeds_two_pooled_sd(self, default_matrix):
        # generator math: a session-level dwell mean moves by log(1.6) in log space while
        # participant and session jitter spread it by sqrt(0.10^2 + 0.05^2)
        predicted = math.log(1.6) / math.hypot(0.10, 0.05)
        assert predicted > 2
        dist, used = dwell_separation(default_matrix)
        assert {"shift_dwell", "backspace_dwell", "mouse_left_dwell"} <= set(used)
        assert dist > 2

    def test_null_separation_small(self):
        dist, _ = dwell_separation(extract_matrix(generate_dataset(separation=1.0, target_keys=400)))
        assert dist < 1.0

    def test_monotone_in_separation(self):
        seps = (1.0, 1.3, 1.6, 2.0)
        ok = 0
        for seed in range(10):
            d = [dwell_separation(extract_matrix(generate_dataset(15, 15, s, seed=seed, target_keys=300)))[0]
                 for s in seps]
            ok += all(b >= a for a, b in zip(d, d[1:]))
        assert ok >= 6
