"""Regenerate the vendored data files in src/qsattn/data/.

iris.csv is the classic two-class iris subset (via scikit-learn).  mc.tsv
and rp.tsv are synthetic corpora with the documented shapes: MC has 130
sentences of 3-4 words over a 17-word vocabulary (food vs IT), RP has 105
four-word phrases over a 115-word vocabulary where the label says whether
the relative clause is subject-type ("device that detects planets") or
object-type ("device that observatory has").
"""

from __future__ import annotations

import random
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "src" / "qsattn" / "data"

SUBJECTS = ["man", "woman", "person", "student"]
FOOD_VERBS = ["cooks", "prepares"]
IT_VERBS = ["runs", "debugs"]
FOOD_OBJECTS = ["meal", "dinner", "sauce"]
IT_OBJECTS = ["application", "software", "program"]
FOOD_ADJS = ["tasty"]
IT_ADJS = ["useful"]
SHARED_ADV = "daily"

RP_NOUNS = """device telescope observatory planet scientist machine student
teacher engineer doctor book author library signal antenna satellite comet
star galaxy sensor robot compiler computer network message letter editor
journal paper theory experiment laboratory sample mineral rock volcano ocean
river mountain forest animal bird insect flower garden farmer crop market
city bridge tunnel train pilot aircraft harbor ship captain""".split()

RP_VERBS = """detects observes has builds owns studies examines describes
measures tracks finds explores analyzes monitors records predicts reveals
supports contains produces collects protects attracts avoids carries causes
changes controls creates damages destroys discovers displays emits employs
follows generates guides holds identifies ignores improves includes launches
locates maintains moves needs operates orbits powers processes reaches
repairs requires senses shows""".split()


def mc_sentences(cls: str) -> list[str]:
    # Every layout keeps the verb in second position: subjects and the
    # adverb are class-neutral, verbs/objects/adjectives are indicative.
    verbs = FOOD_VERBS if cls == "food" else IT_VERBS
    objs = FOOD_OBJECTS if cls == "food" else IT_OBJECTS
    adjs = FOOD_ADJS if cls == "food" else IT_ADJS
    out = []
    for s in SUBJECTS:
        for v in verbs:
            for o in objs:
                out.append(f"{s} {v} {o}")
                out.append(f"{s} {v} {o} {SHARED_ADV}")
                for a in adjs:
                    out.append(f"{s} {v} {a} {o}")
    return out


def make_mc(rng: random.Random) -> list[str]:
    lines = []
    for cls, label in (("food", "0"), ("it", "1")):
        pool = mc_sentences(cls)
        rng.shuffle(pool)
        lines += [f"{label}\t{s}" for s in pool[:65]]
    rng.shuffle(lines)
    vocab = {w for line in lines for w in line.split("\t")[1].split()}
    assert len(vocab) == 17, len(vocab)
    assert len(lines) == 130
    return lines


def make_rp(rng: random.Random) -> list[str]:
    # Zipf-like structure: a small core of frequent nouns/verbs carries
    # most sentences (so word roles are learnable from co-occurrence),
    # while the remaining words appear exactly once (so a sizable slice
    # of any test split hinges on barely-seen vocabulary and the task
    # stays hard, as in the original corpus).
    assert len(RP_NOUNS) == 57 and len(RP_VERBS) == 57
    nouns = RP_NOUNS[:]
    verbs = RP_VERBS[:]
    rng.shuffle(nouns)
    rng.shuffle(verbs)
    core_nouns, tail_nouns = nouns[:8], nouns[8:]
    core_verbs, tail_verbs = verbs[:8], verbs[8:]

    def clause(n1: str, v: str, n2: str) -> str:
        if rng.random() < 0.5:
            return f"0\t{n1} that {v} {n2}"
        return f"1\t{n1} that {n2} {v}"

    lines = []
    pairs = [(a, b) for a in core_nouns for b in core_nouns if a != b]
    for k, (n1, n2) in enumerate(pairs):  # 56 all-core sentences
        lines.append(clause(n1, core_verbs[k % len(core_verbs)], n2))
    for k, (v, t) in enumerate(zip(tail_verbs, tail_nouns)):  # 49 tail sentences
        c = core_nouns[k % len(core_nouns)]
        lines.append(clause(c, v, t) if k % 2 else clause(t, v, c))
    rng.shuffle(lines)
    vocab = {w for line in lines for w in line.split("\t")[1].split()}
    assert len(vocab) == 115, len(vocab)
    assert len(lines) == 105
    return lines


def make_iris() -> list[str]:
    from sklearn.datasets import load_iris

    data = load_iris()
    names = {0: "setosa", 1: "versicolour"}
    lines = ["sepal_length,sepal_width,petal_length,petal_width,label"]
    for feats, target in zip(data.data, data.target):
        if target not in names:
            continue
        vals = ",".join(f"{v:.1f}" for v in feats)
        lines.append(f"{vals},{names[int(target)]}")
    assert len(lines) == 101
    return lines


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "iris.csv").write_text("\n".join(make_iris()) + "\n")
    (DATA / "mc.tsv").write_text("\n".join(make_mc(random.Random(20240501))) + "\n")
    (DATA / "rp.tsv").write_text("\n".join(make_rp(random.Random(20240502))) + "\n")
    print("wrote", sorted(p.name for p in DATA.iterdir()))


if __name__ == "__main__":
    main()
