import json

import numpy as np
import pytest

from avparse import (
    DEFAULT_CONFIG,
    Category,
    CategoryVocabulary,
    EngineConfig,
    ScoreBundle,
    SelectedCategories,
    extract_candidates,
    load_bundle,
    parse_video,
    refine_candidates,
    run_pipeline,
    sigmoid_scores,
)
from avparse.parsing import binary_runs, events_to_matrix

from conftest import random_bundle, small_vocabulary


def selected(k):
    return SelectedCategories(tuple(range(k)), tuple(f"cat_{i}" for i in range(k)))


class TestExtractCandidates:
    def test_two_runs(self):
        decisions = np.array([[0], [1], [1], [0], [1], [1]])
        cands = extract_candidates(decisions, selected(1), "audio")
        assert [(c.start, c.end) for c in cands] == [(2, 3), (5, 6)]
        assert all(c.modality == "audio" for c in cands)

    def test_all_zero(self):
        assert extract_candidates(np.zeros((6, 1)), selected(1)) == []

    def test_all_one(self):
        cands = extract_candidates(np.ones((6, 1)), selected(1))
        assert [(c.start, c.end) for c in cands] == [(1, 6)]

    def test_ordered_by_category_then_start(self):
        decisions = np.array([[1, 1], [0, 1], [1, 0]])
        cands = extract_candidates(decisions, selected(2))
        assert [(c.category_id, c.start, c.end) for c in cands] == [
            ("cat_0", 1, 1), ("cat_0", 3, 3), ("cat_1", 1, 2),
        ]

    def test_maximality_and_partition_random(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            t = int(rng.integers(1, 15))
            k = int(rng.integers(1, 5))
            decisions = (rng.random((t, k)) < 0.45).astype(np.uint8)
            cands = extract_candidates(decisions, selected(k))
            covered = np.zeros_like(decisions)
            for c in cands:
                col = int(c.category_id.split("_")[1])
                # maximality: the run cannot extend either direction
                assert c.start == 1 or decisions[c.start - 2, col] == 0
                assert c.end == t or decisions[c.end, col] == 0
                assert decisions[c.start - 1:c.end, col].all()
                # disjointness: nothing double-covered
                assert not covered[c.start - 1:c.end, col].any()
                covered[c.start - 1:c.end, col] = 1
            # partition: covered cells are exactly the positive decisions
            np.testing.assert_array_equal(covered, decisions)


class TestRefineCandidates:
    def make_bundle(self):
        rng = np.random.default_rng(31)
        return random_bundle(rng, num_segments=8, num_categories=2)

    def test_tau_r_zero_keeps_all(self):
        bundle = self.make_bundle()
        config = EngineConfig(tau_r=0.0)
        sel = SelectedCategories((0, 1), bundle.vocabulary.ids)
        decisions = (sigmoid_scores(bundle.audio_logits) > 0.5).astype(np.uint8)
        cands = extract_candidates(decisions, sel, "audio")
        kept = refine_candidates(cands, bundle, sel, "audio", config)
        assert len(kept) == len(cands)
        assert all(k.span_score > 0.0 for k in kept)

    def test_tau_r_near_one_discards_all(self):
        bundle = self.make_bundle()
        config = EngineConfig(tau_r=0.999999)
        sel = SelectedCategories((0, 1), bundle.vocabulary.ids)
        cands = extract_candidates(np.ones((8, 2), dtype=np.uint8), sel, "audio")
        assert refine_candidates(cands, bundle, sel, "audio", config) == []

    def test_single_segment_span_score_is_fused_score(self):
        bundle = self.make_bundle()
        sel = SelectedCategories((0, 1), bundle.vocabulary.ids)
        decisions = np.zeros((8, 2), dtype=np.uint8)
        decisions[3, 1] = 1
        cands = extract_candidates(decisions, sel, "audio_visual")
        kept = refine_candidates(cands, bundle, sel, "audio_visual", EngineConfig(tau_r=0.0))
        expected = (
            DEFAULT_CONFIG.alpha * sigmoid_scores(bundle.audio_logits)[3, 1]
            + (1 - DEFAULT_CONFIG.alpha) * sigmoid_scores(bundle.visual_logits)[3, 1]
        )
        assert kept[0].span_score == pytest.approx(expected, abs=1e-12)

    def test_subset_and_monotone_in_tau_r(self):
        bundle = self.make_bundle()
        sel = SelectedCategories((0, 1), bundle.vocabulary.ids)
        rng = np.random.default_rng(5)
        decisions = (rng.random((8, 2)) < 0.5).astype(np.uint8)
        cands = extract_candidates(decisions, sel, "visual")
        previous = None
        for tau_r in (0.0, 0.3, 0.6, 0.9):
            kept = refine_candidates(cands, bundle, sel, "visual", EngineConfig(tau_r=tau_r))
            spans = {(c.category_id, c.start, c.end) for c in kept}
            all_spans = {(c.category_id, c.start, c.end) for c in cands}
            assert spans <= all_spans
            if previous is not None:
                assert spans <= previous
            previous = spans


class TestFuseBundle:
    def test_levels_and_alpha(self):
        from avparse.parsing import fuse_bundle

        rng = np.random.default_rng(53)
        bundle = random_bundle(rng, num_segments=6, num_categories=4,
                               with_video_logits=True)
        for modality, alpha in (("audio", 1.0), ("visual", 0.0), ("audio_visual", 0.5)):
            fused = fuse_bundle(bundle, modality, DEFAULT_CONFIG)
            assert fused.alpha_used == alpha
            assert fused.video_level.shape == (4,)
            assert fused.segment_level.shape == (6, 4)
            assert np.all((fused.video_level >= 0) & (fused.video_level <= 1))
            assert np.all((fused.segment_level >= 0) & (fused.segment_level <= 1))
        audio = fuse_bundle(bundle, "audio", DEFAULT_CONFIG)
        np.testing.assert_array_equal(
            audio.segment_level, sigmoid_scores(bundle.audio_logits)
        )


class TestRunPipeline:
    def test_empty_selection_is_vacuous(self):
        bundle = ScoreBundle(
            video_id="v",
            num_segments=4,
            vocabulary=small_vocabulary(2),
            audio_logits=np.full((4, 2), -5.0),
            visual_logits=np.full((4, 2), -5.0),
        )
        result = run_pipeline(bundle, "audio_visual", DEFAULT_CONFIG)
        assert len(result.selected) == 0
        assert result.candidates == ()
        assert not result.decisions.any()

    def test_no_selection_runs_full_vocabulary(self):
        rng = np.random.default_rng(17)
        bundle = random_bundle(rng, num_categories=25)
        config = DEFAULT_CONFIG.with_toggles_off("use_class_selection")
        result = run_pipeline(bundle, "audio_visual", config)
        assert result.selected.indices == tuple(range(25))
        assert result.decisions.shape == (10, 25)

    def test_audio_pipeline_ignores_visual_logits(self):
        rng = np.random.default_rng(19)
        base = random_bundle(rng, with_features=False)
        other = ScoreBundle(
            video_id=base.video_id,
            num_segments=base.num_segments,
            vocabulary=base.vocabulary,
            audio_logits=base.audio_logits,
            visual_logits=rng.normal(0, 2, base.visual_logits.shape),
        )
        a1 = run_pipeline(base, "audio", DEFAULT_CONFIG)
        a2 = run_pipeline(other, "audio", DEFAULT_CONFIG)
        np.testing.assert_array_equal(a1.decisions, a2.decisions)

    def test_identical_logits_give_identical_audio_and_visual(self):
        rng = np.random.default_rng(23)
        logits = rng.normal(0, 2, (10, 3))
        bundle = ScoreBundle(
            video_id="v",
            num_segments=10,
            vocabulary=small_vocabulary(3),
            audio_logits=logits,
            visual_logits=logits.copy(),
        )
        audio = run_pipeline(bundle, "audio", DEFAULT_CONFIG)
        visual = run_pipeline(bundle, "visual", DEFAULT_CONFIG)
        np.testing.assert_array_equal(audio.decisions, visual.decisions)

    def test_all_toggles_off_reduces_to_static_thresholding(self):
        rng = np.random.default_rng(29)
        bundle = random_bundle(rng, num_segments=12, num_categories=4)
        config = DEFAULT_CONFIG.with_toggles_off(
            "use_cosine_scale", "use_dynamic_thresholds", "use_refinement",
            "use_class_selection",
        )
        result = run_pipeline(bundle, "audio_visual", config)
        fused = 0.5 * sigmoid_scores(bundle.audio_logits) + 0.5 * sigmoid_scores(bundle.visual_logits)
        expected = (fused > DEFAULT_CONFIG.tau0).astype(np.uint8)
        np.testing.assert_array_equal(result.decisions, expected)
        # raw candidates: every maximal run of the static decisions survives
        runs = [
            (bundle.vocabulary.ids[col], start, end)
            for col in range(4)
            for start, end in binary_runs(expected[:, col])
        ]
        assert sorted((c.category_id, c.start, c.end) for c in result.candidates) == sorted(runs)

    def test_threshold_budget_per_pipeline(self):
        # T tau-vectors of size K, plus the two scalar thresholds in the config
        rng = np.random.default_rng(31)
        bundle = random_bundle(rng, num_segments=7)
        result = run_pipeline(bundle, "audio_visual", DEFAULT_CONFIG)
        assert len(result.trace) == 7
        for tr in result.trace:
            assert tr.tau_after.shape == (len(result.selected),)


class TestParseVideo:
    def test_events_sorted_and_consistent_with_decisions(self):
        rng = np.random.default_rng(37)
        bundle = random_bundle(rng, with_video_logits=True)
        parsed = parse_video(bundle, DEFAULT_CONFIG)
        keys = [(e.modality, e.category_id, e.start) for e in parsed.events]
        assert keys == sorted(keys)
        for e in parsed.events:
            col = bundle.vocabulary.index_of(e.category_id)
            assert parsed.decisions[e.modality][e.start - 1:e.end, col].all()

    def test_deterministic(self):
        rng = np.random.default_rng(41)
        bundle = random_bundle(rng)
        first = parse_video(bundle, DEFAULT_CONFIG)
        second = parse_video(bundle, DEFAULT_CONFIG)
        assert first.events == second.events
        for m in first.decisions:
            np.testing.assert_array_equal(first.decisions[m], second.decisions[m])

    def test_vocabulary_permutation_equivariance(self):
        rng = np.random.default_rng(43)
        bundle = random_bundle(rng, num_categories=4, with_video_logits=True)
        perm = [2, 0, 3, 1]
        permuted = ScoreBundle(
            video_id=bundle.video_id,
            num_segments=bundle.num_segments,
            vocabulary=CategoryVocabulary(tuple(bundle.vocabulary.entries[i] for i in perm)),
            audio_logits=bundle.audio_logits[:, perm],
            visual_logits=bundle.visual_logits[:, perm],
            video_audio_logits=bundle.video_audio_logits[perm],
            video_visual_logits=bundle.video_visual_logits[perm],
            visual_features=bundle.visual_features,
        )
        original = parse_video(bundle, DEFAULT_CONFIG)
        shuffled = parse_video(permuted, DEFAULT_CONFIG)
        assert {(e.modality, e.category_id, e.start, e.end) for e in original.events} == {
            (e.modality, e.category_id, e.start, e.end) for e in shuffled.events
        }
        for m in original.decisions:
            np.testing.assert_array_equal(
                original.decisions[m][:, perm], shuffled.decisions[m]
            )

    def test_drift_fixture_frozen_decisions(self, data_dir):
        bundle = load_bundle(data_dir / "drift_fixture.bundle.json")
        expected = json.loads((data_dir / "drift_fixture.expected.json").read_text())

        dynamic = parse_video(bundle, DEFAULT_CONFIG)
        for m in ("audio", "visual", "audio_visual"):
            assert dynamic.decisions[m].tolist() == expected["dynamic"]["decisions"][m]
        assert [
            {"category_id": e.category_id, "modality": e.modality, "start": e.start,
             "end": e.end, "span_score": pytest.approx(e.span_score, abs=1e-9)}
            for e in dynamic.events
        ] == expected["dynamic"]["events"]

        static = parse_video(bundle, DEFAULT_CONFIG.with_toggles_off("use_dynamic_thresholds"))
        for m in ("audio", "visual", "audio_visual"):
            assert static.decisions[m].tolist() == expected["static"]["decisions"][m]

    def test_drift_fixture_dynamic_detects_strictly_longer_prefix(self, data_dir):
        bundle = load_bundle(data_dir / "drift_fixture.bundle.json")
        dynamic = parse_video(bundle, DEFAULT_CONFIG)
        static = parse_video(bundle, DEFAULT_CONFIG.with_toggles_off("use_dynamic_thresholds"))
        dyn_col = dynamic.decisions["audio_visual"][:, 0]
        sta_col = static.decisions["audio_visual"][:, 0]
        assert int(dyn_col.sum()) > int(sta_col.sum())
        # both are prefixes
        assert dyn_col.tolist() == [1] * int(dyn_col.sum()) + [0] * (10 - int(dyn_col.sum()))
        assert sta_col.tolist() == [1] * int(sta_col.sum()) + [0] * (10 - int(sta_col.sum()))


class TestEventsToMatrix:
    def test_paint_and_reject_unknown(self):
        from avparse import BundleError, EventCandidate

        events = [EventCandidate("a", 2, 3, "audio", 0.9)]
        out = events_to_matrix(events, "audio", 4, ["a", "b"])
        np.testing.assert_array_equal(out, [[0, 0], [1, 0], [1, 0], [0, 0]])
        with pytest.raises(BundleError, match="not in ground-truth vocabulary"):
            events_to_matrix([EventCandidate("zz", 1, 1, "audio")], "audio", 4, ["a"])


class TestPredictionFiles:
    def test_combined_array_per_corpus(self, tmp_path):
        from avparse.parsing import load_predictions

        docs = [
            {"format_version": 1, "video_id": "v1",
             "events": [{"category_id": "a", "modality": "audio",
                         "start": 1, "end": 2, "span_score": 0.8}]},
            {"format_version": 1, "video_id": "v2", "events": []},
        ]
        path = tmp_path / "corpus.pred.json"
        path.write_text(json.dumps(docs))
        loaded = load_predictions(path)
        assert set(loaded) == {"v1", "v2"}
        assert loaded["v1"][0].category_id == "a"
        assert loaded["v2"] == []

    def test_duplicate_video_rejected(self, tmp_path):
        from avparse import BundleError
        from avparse.parsing import load_predictions

        doc = {"format_version": 1, "video_id": "v1", "events": []}
        path = tmp_path / "dup.pred.json"
        path.write_text(json.dumps([doc, doc]))
        with pytest.raises(BundleError, match="duplicate"):
            load_predictions(path)

    def test_unknown_modality_rejected(self, tmp_path):
        from avparse import BundleError
        from avparse.parsing import load_predictions

        doc = {"format_version": 1, "video_id": "v1",
               "events": [{"category_id": "a", "modality": "tactile",
                           "start": 1, "end": 2}]}
        path = tmp_path / "bad.pred.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(BundleError, match="tactile"):
            load_predictions(path)

    def test_round_trip_through_parse_video(self, tmp_path):
        from avparse.parsing import load_predictions, write_predictions

        rng = np.random.default_rng(61)
        bundle = random_bundle(rng, with_video_logits=True)
        parsed = parse_video(bundle, DEFAULT_CONFIG)
        path = tmp_path / "v.pred.json"
        write_predictions(parsed, path)
        loaded = load_predictions(path)[bundle.video_id]
        assert [(e.modality, e.category_id, e.start, e.end) for e in loaded] == [
            (e.modality, e.category_id, e.start, e.end) for e in parsed.events
        ]
