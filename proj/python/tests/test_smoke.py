import numpy as np
import pytest

import vipro

SMALL = {
    "corpus": {"n_pairs": 64, "frames": 4, "n_scenes": 2, "n_categories": 4},
    "attack": {"eta": 4},
    "candidates": 3,
    "queries_k": 6,
    "seed": 11,
}


@pytest.fixture(scope="module")
def corpus():
    return vipro.generate_corpus({"n_pairs": 32, "frames": 4, "n_scenes": 2, "n_categories": 4})


def test_corpus_shape(corpus):
    assert corpus.size == 32
    v = corpus.video(0)
    assert v.shape == (4, 768)
    assert v.min() >= 0.0 and v.max() <= 1.0
    assert len(corpus.captions) == 32
    assert corpus.amplitude > 0.0


def test_attack_respects_budget(corpus):
    model = vipro.plant_model(corpus, seed=1)
    video = corpus.video(2)
    queries = [corpus.category_query(corpus.categories[2])]
    eps = 16 / 255
    r = vipro.attack(model, video, queries, {"eta": 8, "epsilon": eps})
    linf, in_range = vipro.check_budget(video, r["adversarial"])
    assert linf <= eps + 1e-12
    assert in_range
    assert len(r["loss_trace"]) == 8
    before = model.similarity(queries[0], video)
    after = model.similarity(queries[0], r["adversarial"])
    assert after > before


def test_more_attack_reports_clips(corpus):
    model = vipro.plant_model(corpus, seed=1)
    queries = [corpus.category_query(k) for k in range(2)]
    r = vipro.attack(model, corpus.video(0), queries,
                     {"eta": 2, "more_enabled": True, "sim_mode": "grey"})
    clips = r["clips"]
    assert clips[0][0] == 0 and clips[-1][1] == 4


def test_clipping_and_defenses(corpus):
    assert vipro.temporal_clip(np.ones((8, 3)), 0.134, 2) == [(0, 8)]
    parts = vipro.random_clip(12, 2, 7, 3)
    assert len(parts) == 3 and parts[-1][1] == 12
    v = corpus.video(1)
    model = vipro.plant_model(corpus, seed=1)
    s = vipro.temporal_shuffle(v, 4, 3)
    assert np.abs(model.encode_video(s) - model.encode_video(v)).max() <= 1e-12
    c = vipro.compress(v, 75)
    assert c.shape == v.shape


def test_errors():
    with pytest.raises(vipro.ConfigError):
        vipro.run({"candidatez": 3})
    with pytest.raises(vipro.IoError):
        vipro.report("/nonexistent/vipro")
    with pytest.raises(vipro.DimensionError):
        vipro.compress(np.zeros((1, 700)), 75)


def test_run_and_report(tmp_path):
    doc = vipro.run(SMALL, tmp_path / "runs" / "a")
    assert doc["report_hash"] == vipro.report_hash(doc)
    assert vipro.run(SMALL)["report_hash"] == doc["report_hash"]
    assert (tmp_path / "runs" / "a" / "metrics.csv").exists()
    summary = vipro.report(tmp_path / "runs")
    assert len(summary["runs"]) == 1
    csv = vipro.ablate(SMALL, "alpha")
    assert csv.count("\n") == 5
