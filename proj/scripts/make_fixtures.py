#!/usr/bin/env python3
"""Regenerates the bundled fixtures under data/.

Deterministic: running it twice produces byte-identical files. The clustering
fixture is checked against scipy's average-linkage implementation and the
mitigation count fixtures against scipy's exact binomial test before writing.
"""
import csv
import json
import math
import pathlib
import random

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.stats import binom, binomtest

from seed_messages import DAILY, TASK

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "data"

FEATURES = ["concise", "expert", "helpful", "empathetic", "friendly", "detailed",
            "engaging", "curious", "polite", "impartial", "outgoing", "efficient"]

CANDIDATES = {  # lemma -> distinct-paper frequency
    "helpful": 19, "empathetic": 15, "concise": 12, "friendly": 12, "detailed": 8,
    "expert": 8, "engaging": 7, "informative": 7, "short": 7, "curious": 6,
    "polite": 6, "caring": 5, "efficient": 5, "impartial": 5, "outgoing": 5,
    "professional": 5,
}
MERGES = {"short": "concise", "professional": "expert", "informative": "helpful",
          "caring": "empathetic"}

# noun/adverb surface forms seen in prompts and their adjective lemma
ADJECTIVIZE = {
    "conciseness": "concise", "concisely": "concise", "expertise": "expert",
    "helpfulness": "helpful", "empathy": "empathetic", "empathetically": "empathetic",
    "friendliness": "friendly", "detail": "detailed", "engagement": "engaging",
    "curiosity": "curious", "politeness": "polite", "politely": "polite",
    "impartiality": "impartial", "efficiency": "efficient", "professionalism": "professional",
    "brevity": "brief", "creativity": "creative", "humor": "humorous", "care": "caring",
    "informativeness": "informative", "thoughtfulness": "thoughtful", "honesty": "honest",
    "kindness": "kind", "patience": "patient", "warmth": "warm", "clarity": "clear",
}

TAIL_BASE = """
creative humorous extraverted thoughtful brief honest kind patient warm clear
supportive respectful formal casual cheerful calm confident enthusiastic knowledgeable
persuasive playful sarcastic witty optimistic pessimistic neutral objective factual
accurate reliable trustworthy transparent humble assertive agreeable conscientious
neurotic open introverted emotional rational logical analytical creative2 imaginative
romantic dramatic serious funny gentle compassionate sympathetic understanding
encouraging motivating inspiring energetic lively relaxed friendly2 approachable
courteous tactful diplomatic direct blunt straightforward simple plain elaborate
verbose terse succinct comprehensive thorough precise specific vague abstract concrete
structured organized coherent fluent natural human-like conversational interactive
proactive responsive attentive curious2 inquisitive skeptical critical cautious careful
safe harmless ethical fair unbiased balanced inclusive culturally-aware sensitive
nonjudgmental reassuring comforting soothing upbeat positive negative witty2 clever
smart wise mature childlike youthful elderly authoritative commanding persuasive2
"""
PREFIXES = ["", "highly ", "slightly ", "overly "]


def write_topics_and_seeds():
    topics = {"Task": list(TASK), "Daily": list(DAILY)}
    (DATA / "topics.json").write_text(json.dumps(topics, indent=2, ensure_ascii=False) + "\n")
    lines = []
    for domain, table in (("Task", TASK), ("Daily", DAILY)):
        for t_index, (topic, messages) in enumerate(table.items()):
            assert len(messages) == 10, topic
            for m_index, message in enumerate(messages):
                seed_id = f"{domain.lower()}-{t_index:02d}-{m_index:02d}"
                rec = {"seed_id": seed_id, "domain": domain, "topic": topic,
                       "first_message": message}
                lines.append(json.dumps(rec, ensure_ascii=False))
    assert len(lines) == 200
    (DATA / "seeds.jsonl").write_text("\n".join(lines) + "\n")


def write_mentions():
    rng = random.Random(20251016)
    papers = [f"P{i:03d}" for i in range(127)]
    inverse = {}
    for surface, lemma in ADJECTIVIZE.items():
        inverse.setdefault(lemma, []).append(surface)

    base = [w for w in TAIL_BASE.split() if not w[-1].isdigit()]
    base = list(dict.fromkeys(base))
    tail = [p + w for p in PREFIXES for w in base]
    tail = [w for w in tail if w not in CANDIDATES]
    n_unique = 462
    n_tail = n_unique - len(CANDIDATES)
    tail = tail[:n_tail]
    assert len(tail) == n_tail, len(tail)

    # long-tail frequencies: 347 singletons (75.1% of 462), the rest 2..4
    n_single = 347
    freqs = {}
    named_four = ["creative", "humorous", "extraverted", "thoughtful", "brief"]
    for w in named_four:
        freqs[w] = 4
    rest = [w for w in tail if w not in freqs]
    for w in rest[:n_single]:
        freqs[w] = 1
    for w in rest[n_single:]:
        freqs[w] = rng.choice([2, 2, 2, 3, 3, 4])
    freqs.update(CANDIDATES)
    assert len(freqs) == n_unique
    assert sum(1 for f in freqs.values() if f == 1) == n_single

    records = []
    for lemma in sorted(freqs):
        chosen = rng.sample(papers, freqs[lemma])
        for paper in chosen:
            # some papers mention the same feature for two agents
            repeats = 2 if rng.random() < 0.15 else 1
            for _ in range(repeats):
                forms = [lemma] + inverse.get(lemma, [])
                surface = rng.choice(forms)
                if rng.random() < 0.1:
                    surface = surface.capitalize()
                records.append({"surface_form": surface, "paper_id": paper,
                                "agent_id": f"{paper}-A{rng.randrange(1, 6)}"})
    rng.shuffle(records)
    with open(DATA / "mentions.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
    with open(DATA / "adjectivization.tsv", "w") as fh:
        for k in sorted(ADJECTIVIZE):
            fh.write(f"{k}\t{ADJECTIVIZE[k]}\n")


def write_embeddings():
    rng = np.random.default_rng(7)
    dim = 32
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    basis = q.T  # orthonormal rows
    shared = basis[-1]
    vectors = {}
    for i, f in enumerate(FEATURES):
        v = 0.92 * basis[i] + 0.39 * shared
        vectors[f] = v / np.linalg.norm(v)
    for j, (member, head) in enumerate(MERGES.items()):
        u = basis[12 + j]
        v = 0.80 * vectors[head] + 0.60 * u
        vectors[member] = v / np.linalg.norm(v)
    names = sorted(vectors)
    mat = np.stack([vectors[n] for n in names])

    # independent check: scipy average linkage on cosine distance
    z = linkage(mat, method="average", metric="cosine")
    merged = [row for row in z if row[2] < 0.5]
    assert len(merged) == 4, z[:, 2]
    assert z[4, 2] > 0.6, z[4, 2]
    pairs = set()
    for a, b, _, _ in merged:
        assert a < len(names) and b < len(names)
        pairs.add(frozenset((names[int(a)], names[int(b)])))
    assert pairs == {frozenset(p) for p in MERGES.items()}, pairs

    out = {n: [round(float(x), 12) for x in vectors[n]] for n in names}
    (DATA / "embeddings.json").write_text(json.dumps(out, indent=1) + "\n")


TABLE2 = [
    # main, side, domains, {method: (main_rate, side_rate)}
    ("concise", "expert", ["Task", "Daily"], "llama3",
     {"OnlyMain": (.812, .281), "OnlySide": (.479, .709), "Prompting": (.482, .709), "Steering": (.367, .660)}),
    ("efficient", "helpful", ["Task", "Daily"], "llama3",
     {"OnlyMain": (.532, .291), "OnlySide": (.587, .599), "Prompting": (.394, .945), "Steering": (.315, .941)}),
    ("curious", "empathetic", ["Daily"], "llama3",
     {"OnlyMain": (.822, .438), "OnlySide": (.730, .838), "Prompting": (.934, .878), "Steering": (.940, .820)}),
    ("engaging", "impartial", ["Daily"], "qwen3",
     {"OnlyMain": (.982, .304), "OnlySide": (.248, .788), "Prompting": (.990, .484), "Steering": (.948, .474)}),
    ("polite", "efficient", ["Task", "Daily"], "qwen3",
     {"OnlyMain": (.697, .440), "OnlySide": (.221, .522), "Prompting": (.983, .641), "Steering": (.959, .459)}),
]
UNSTARRED = {("concise", "OnlySide", "main"), ("concise", "Prompting", "main"),
             ("engaging", "Prompting", "side"), ("engaging", "Steering", "side"),
             ("polite", "OnlySide", "side")}


def write_table2_counts():
    judged = 1000
    rows = []
    for main, side, domains, model, methods in TABLE2:
        for method, (main_rate, side_rate) in methods.items():
            for which, feature, rate in (("main", main, main_rate), ("side", side, side_rate)):
                wins = round(rate * judged)
                assert wins / judged == rate
                p = binomtest(wins, judged, 0.5).pvalue
                starred = (main, method, which) not in UNSTARRED
                assert (p <= 0.05) == starred, (main, method, which, p)
                rows.append([main, side, "|".join(domains), model, method, feature, wins, judged])
    with open(DATA / "table2_counts.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["main", "side", "domains", "model", "method", "eval_feature", "wins", "judged"])
        w.writerows(rows)


REPORTED_POOLED = {
    ("concise", "helpful"): .232, ("concise", "expert"): .256, ("concise", "impartial"): .449,
    ("efficient", "helpful"): .338, ("efficient", "expert"): .378, ("efficient", "length"): .209,
    ("expert", "efficient"): .660, ("expert", "concise"): .425,
    ("helpful", "efficient"): .590, ("helpful", "detailed"): .629,
    ("impartial", "concise"): .577, ("impartial", "length"): .426, ("impartial", "empathetic"): .401,
    ("empathetic", "impartial"): .576, ("outgoing", "length"): .715, ("engaging", "length"): .746,
}
# Table-1 pairs without a pooled value: per-slice stand-ins
STANDIN_POOLED = {("curious", "empathetic"): .438, ("engaging", "impartial"): .304,
                  ("polite", "efficient"): .440}
LENGTH_SYNTH = {"concise": .180, "detailed": .820, "expert": .760}


def write_pooled_matrix():
    rng = random.Random(99)
    judged = 3000
    sides = FEATURES + ["length"]
    with open(DATA / "pooled_matrix_counts.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["main", "side", "wins", "judged", "source"])
        for m in FEATURES:
            for s in sides:
                key = (m, s)
                if key in REPORTED_POOLED:
                    rate, src = REPORTED_POOLED[key], "reported"
                elif key in STANDIN_POOLED:
                    rate, src = STANDIN_POOLED[key], "slice-standin"
                elif s == "length" and m in LENGTH_SYNTH:
                    rate, src = LENGTH_SYNTH[m], "synthetic"
                elif m == s:
                    rate, src = round(rng.uniform(0.70, 0.95), 3), "synthetic"
                else:
                    rate, src = round(rng.uniform(0.47, 0.62), 3), "synthetic"
                wins = round(rate * judged)
                w.writerow([m, s, wins, judged, src])


# ---- simulator world for the end-to-end oracle test ----
MARKERS = {
    "concise": ["briefly", "succinctly", "tldr", "shortly"],
    "expert": ["technically", "rigorously", "empirically", "methodologically"],
    "helpful": ["guide", "tip", "recommend", "steps"],
    "empathetic": ["understand", "feel", "sorry", "hear"],
    "friendly": ["hey", "buddy", "pal", "smile"],
    "detailed": ["specifically", "furthermore", "additionally", "notably"],
    "engaging": ["imagine", "wow", "picture", "exciting"],
    "curious": ["wonder", "why", "curious", "intriguing"],
    "polite": ["please", "kindly", "thank", "appreciate"],
    "impartial": ["objectively", "neutrally", "balanced", "unbiased"],
    "outgoing": ["party", "everyone", "together", "social"],
    "efficient": ["quick", "fast", "streamlined", "directly"],
}
FILLER = ("the a it is of to and in that this for on with as at by from about "
          "so then there here one some more most very also just like really "
          "well can will would could might may thing things way ways point "
          "idea ideas part parts time case cases kind sort lot lots").split()
LENGTH_MULT = {"concise": 0.4, "efficient": 0.5, "detailed": 2.0, "expert": 1.4,
               "outgoing": 1.4, "engaging": 1.5}
CONTAMINATION = {
    ("concise", "expert"): -0.8, ("concise", "helpful"): -0.7, ("concise", "detailed"): -0.9,
    ("efficient", "helpful"): -0.6, ("efficient", "expert"): -0.5, ("efficient", "concise"): 0.6,
    ("curious", "empathetic"): -0.6, ("curious", "engaging"): 0.6,
    ("engaging", "impartial"): -0.6, ("engaging", "outgoing"): 0.6,
    ("polite", "efficient"): -0.6, ("polite", "friendly"): 0.5,
    ("expert", "efficient"): 0.6, ("expert", "friendly"): -0.5,
    ("helpful", "detailed"): 0.6, ("helpful", "efficient"): 0.5,
    ("empathetic", "impartial"): 0.5, ("empathetic", "friendly"): 0.7,
    ("impartial", "empathetic"): -0.6, ("impartial", "engaging"): -0.5,
    ("friendly", "engaging"): 0.7, ("friendly", "polite"): 0.6,
    ("outgoing", "friendly"): 0.7, ("outgoing", "concise"): -0.6,
    ("detailed", "concise"): -0.8, ("detailed", "expert"): 0.5,
}
BASE_LENGTH = 80
DENSITY = 0.03


def expected_rate(main, side):
    """Analytic win rate of the marker-density judge (ties split evenly)."""
    w = {main: 1.0}
    if side != main:
        w[side] = max(-1.0, min(1.0, CONTAMINATION.get((main, side), 0.0)))
    length = BASE_LENGTH
    for f, x in w.items():
        length *= LENGTH_MULT.get(f, 1.0) ** x
    lc = int(math.floor(length + 0.5))
    pc = DENSITY * (1 + w.get(side, 0.0))
    cc = binom.pmf(np.arange(lc + 1), lc, pc)
    rr = binom.pmf(np.arange(BASE_LENGTH + 1), BASE_LENGTH, DENSITY)
    win = tie = 0.0
    for c in range(lc + 1):
        for r in range(BASE_LENGTH + 1):
            a, b = c * BASE_LENGTH, r * lc
            if a > b:
                win += cc[c] * rr[r]
            elif a == b:
                tie += cc[c] * rr[r]
    return win + 0.5 * tie


def write_sim_world():
    for (m, s), c in CONTAMINATION.items():
        rate = expected_rate(m, s)
        assert (rate - 0.5) * c > 0 and abs(rate - 0.5) > 0.08, (m, s, c, rate)
    world = {
        "base_length": BASE_LENGTH,
        "marker_density": DENSITY,
        "length_multiplier": LENGTH_MULT,
        "marker_vocab": MARKERS,
        "filler": FILLER,
    }
    entries = [{"main": f, "side": f, "value": 1.0} for f in FEATURES]
    entries += [{"main": m, "side": s, "value": c} for (m, s), c in CONTAMINATION.items()]
    world["contamination"] = entries
    (DATA / "sim_world.json").write_text(json.dumps(world, indent=1) + "\n")


def main():
    DATA.mkdir(exist_ok=True)
    write_topics_and_seeds()
    write_mentions()
    write_embeddings()
    write_table2_counts()
    write_pooled_matrix()
    write_sim_world()


if __name__ == "__main__":
    main()
