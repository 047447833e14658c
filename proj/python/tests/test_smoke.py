import math
import os
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

import stylefx

DATA = Path(os.environ.get("STYLEFX_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_binomial_p_matches_brute_force():
    n = 30
    pmf = [math.comb(n, i) / 2**n for i in range(n + 1)]
    for k in (0, 9, 15, 22):
        expected = min(1.0, sum(p for p in pmf if p <= pmf[k] * (1 + 1e-7)))
        assert stylefx.binom_two_sided_p(k, n) == pytest.approx(expected, rel=1e-9)


def test_matrix_and_screen_from_counts():
    m = stylefx.matrix_from_counts(DATA / "pooled_matrix_counts.csv")
    assert m["sides"][-1] == "length"
    assert len(m["cells"]) == len(m["mains"]) * len(m["sides"])
    cell = next(c for c in m["cells"] if c["main"] == "concise" and c["side"] == "expert")
    assert cell["rate"] == pytest.approx(768 / 3000)
    assert cell["significant"]
    flagged = stylefx.screen_side_effects(DATA / "pooled_matrix_counts.csv", min_gap=0.1)
    assert ("concise", "expert") in {(p["main"], p["side"]) for p in flagged}
    assert all(p["rate"] <= 0.4 for p in flagged)


def test_heatmap_svg_parses():
    svg = stylefx.heatmap_svg(DATA / "pooled_matrix_counts.csv", title="pooled")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    rects = [e for e in root.iter() if e.tag.endswith("rect")]
    assert len(rects) >= 12 * 13
    assert stylefx.diverging_color(0.5) == (255, 255, 255)


def test_mitigation_table():
    table = stylefx.mitigation_table(DATA / "table2_counts.csv")
    header = table.splitlines()[0]
    assert "OnlyMain" in header


def test_catalog_and_split():
    feats = stylefx.extract_features(
        DATA / "mentions.jsonl", DATA / "adjectivization.tsv", DATA / "embeddings.json"
    )
    assert len(feats) == 12
    split = stylefx.split_dataset(DATA / "seeds.jsonl", (3, 1, 1), 42)
    sizes = [len(split[k]) for k in ("train", "validation", "test")]
    assert sum(sizes) == 200
    assert split == stylefx.split_dataset(DATA / "seeds.jsonl", (3, 1, 1), 42)


def test_cluster_threshold():
    emb = {"a": [1.0, 0.0], "b": [0.8, 0.6], "c": [0.0, 1.0]}
    assert sorted(map(sorted, stylefx.cluster(["a", "b", "c"], emb, 0.7))) == [["a", "b"], ["c"]]
    with pytest.raises(stylefx.StylefxError) as info:
        stylefx.cluster(["a", "zzz"], emb, 0.7)
    assert info.value.kind == "MissingEmbedding"


def test_prompts_and_verdicts():
    p = stylefx.build_system_prompt("cooking", "pair-normal", "concise", "expert")
    assert "concise" in p and "expert" in p
    assert stylefx.parse_verdict(" b. ") == "B"
    assert stylefx.parse_verdict("A or B") is None
    with pytest.raises(stylefx.StylefxError):
        stylefx.build_system_prompt("cooking", "single")


def test_simulated_matrix_is_reproducible():
    args = (DATA / "sim_world.json", DATA / "seeds.jsonl", 1, 3, 4)
    m1 = stylefx.simulate_matrix(*args)
    m2 = stylefx.simulate_matrix(*args)
    assert m1 == m2
    diag = [c for c in m1["cells"] if c["main"] == c["side"]]
    assert all(c["rate"] > 0.5 for c in diag)


def test_refmodel_bake_matches_hook(tmp_path):
    ckpt = stylefx.init_model(n_layers=2, d_model=32, n_heads=4, d_ff=64, max_seq=128, init_seed=5)
    v = [0.01 * ((i % 7) - 3) for i in range(32)]
    hooked = stylefx.logits(ckpt, "hello", layer=1, offset=v)
    baked = stylefx.bake_bias(ckpt, 1, v)
    assert stylefx.logits(baked, "hello") == hooked
    baked.save(tmp_path / "m.ckpt")
    assert stylefx.load_checkpoint(tmp_path / "m.ckpt") == baked
    assert stylefx.default_layer(4) == 2


def test_steering_vector_extraction():
    ckpt = stylefx.init_model(n_layers=2, d_model=32, n_heads=4, d_ff=64, max_seq=512, init_seed=1)
    examples = [("travel", "Plan a trip", "Short plan.", "A long plan with many details.")] * 2
    vecs = stylefx.extract_steering_vectors(ckpt, examples, "concise", [0, 1])
    assert set(vecs) == {0, 1}
    assert all(len(v) == 32 for v in vecs.values())
