"""Regenerates the bundled toy corpus. Output is deterministic."""
import hashlib
import json
import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
rng = random.Random(7)

TOPICS = {
    "t1": "dog food for puppy",
    "t2": "apple tree garden",
    "t3": "car train travel city",
}
# Per simulator: four candidate queries per topic, best first.
SIMULATED = {
    "sim-a": {
        "t1": ["dog food for puppy", "puppy food", "cat food", "animal food brands"],
        "t2": ["apple tree garden", "fruit tree", "garden flower", "rose garden tree"],
        "t3": ["train travel city", "car travel", "city train", "bike city travel"],
    },
    "sim-b": {
        "t1": ["best dog food", "dog food puppy", "kitten food", "pet animal"],
        "t2": ["apple garden", "tree fruit apple", "plant garden", "bread"],
        "t3": ["car city", "travel by train", "vehicle travel city", "house city"],
    },
}


def docs(topic):
    return [f"{topic}-d{i:02d}" for i in range(1, 16)]


def serp(topic, quality):
    """Ten docs: relevant ones pulled to the top in proportion to `quality`."""
    pool = docs(topic)
    keyed = sorted(pool, key=lambda d: (int(d[-2:]) * quality + rng.random() * 15 * (1 - quality)))
    return keyed[:10]


def session(sid, topic, query, serp_, simulator=None, rank=None):
    s = {"session_id": topic, "id": sid, "interactions": [{"query": query, "serp": serp_}]}
    if simulator:
        s["simulator_id"] = simulator
        s["rank"] = rank
    return s


def write_json(name, obj):
    with open(os.path.join(HERE, name), "w") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


real = [session(f"real-{t}", t, q, serp(t, 0.9)) for t, q in TOPICS.items()]
write_json("real.json", {"sessions": real})
for sim, topics in SIMULATED.items():
    out = []
    for t, queries in topics.items():
        for r, q in enumerate(queries, 1):
            out.append(session(f"{sim}-{t}-{r}", t, q, serp(t, 1.0 - 0.2 * r - 0.1 * (sim == "sim-b")), sim, r))
    write_json(f"{sim}.json", {"sessions": out})

with open(os.path.join(HERE, "qrels.txt"), "w") as f:
    for t in TOPICS:
        for d in docs(t):
            i = int(d[-2:])
            grade = 3 if i <= 2 else 2 if i <= 4 else 1 if i <= 7 else 0
            f.write(f"{t} 0 {d} {grade}\n")

# Embeddings: a fixed pseudo-random vector per word; sentences are the mean.
DIM = 8


def word_vec(w):
    h = hashlib.sha256(w.encode()).digest()
    return [round((b - 127.5) / 127.5, 4) for b in h[:DIM]]


texts = set(TOPICS.values())
for topics in SIMULATED.values():
    for qs in topics.values():
        texts.update(qs)
with open(os.path.join(HERE, "embeddings.jsonl"), "w") as f:
    for text in sorted(texts):
        rows = [word_vec(w) for w in text.split()]
        mean = [round(sum(c) / len(rows), 6) for c in zip(*rows)]
        f.write(json.dumps({"text": text, "granularity": "sentence", "dim": DIM, "embedding": mean}) + "\n")
        f.write(json.dumps({"text": text, "granularity": "token", "dim": DIM, "embedding": rows}) + "\n")

# A miniature WordNet in WNDB layout.
NOUNS = [
    # offset, lex file, lemmas, hypernym offset
    (100, 3, ["entity"], None),
    (200, 3, ["organism"], 100),
    (300, 5, ["animal"], 200),
    (310, 5, ["dog"], 300),
    (311, 5, ["puppy"], 310),
    (320, 5, ["cat"], 300),
    (321, 5, ["kitten"], 320),
    (330, 5, ["pet"], 300),
    (400, 20, ["plant"], 200),
    (410, 20, ["tree"], 400),
    (420, 20, ["flower"], 400),
    (421, 20, ["rose"], 420),
    (500, 3, ["object"], 100),
    (510, 13, ["food"], 500),
    (511, 13, ["fruit"], 510),
    (512, 13, ["apple"], 511),
    (513, 13, ["bread"], 510),
    (520, 6, ["vehicle"], 500),
    (521, 6, ["car"], 520),
    (522, 6, ["train"], 520),
    (523, 6, ["bike"], 520),
    (600, 15, ["location"], 100),
    (610, 15, ["city"], 600),
    (620, 15, ["garden"], 600),
    (630, 6, ["house"], 500),
    (700, 4, ["act"], 100),
    (710, 4, ["travel"], 700),
    (720, 4, ["brand"], 500),
]
VERBS = [
    (1000, 38, ["travel"], None),
    (1010, 38, ["drive"], 1000),
    (1020, 34, ["eat"], None),
]
HEADER = "  1 Toy taxonomy in the WordNet 3.0 database layout\n"


def data_lines(entries, pos):
    lines = [HEADER]
    for off, lex, lemmas, hyper in entries:
        words = " ".join(f"{w} 0" for w in lemmas)
        ptrs = f"001 @ {hyper:08d} {pos} 0000" if hyper is not None else "000"
        frames = " 01 + 02 00" if pos == "v" else ""
        lines.append(f"{off:08d} {lex:02d} {pos} {len(lemmas):02d} {words} {ptrs}{frames} | toy\n")
    return "".join(lines)


def index_lines(entries, pos):
    by_lemma = {}
    for off, _, lemmas, hyper in entries:
        for w in lemmas:
            by_lemma.setdefault(w, []).append((off, hyper))
    lines = [HEADER]
    for w in sorted(by_lemma):
        senses = by_lemma[w]
        ptr = any(h is not None for _, h in senses)
        ptrs = "1 @" if ptr else "0"
        offs = " ".join(f"{o:08d}" for o, _ in senses)
        lines.append(f"{w} {pos} {len(senses)} {ptrs} {len(senses)} 0 {offs}\n")
    return "".join(lines)


wn = os.path.join(HERE, "wordnet")
for name, text in [
    ("data.noun", data_lines(NOUNS, "n")),
    ("index.noun", index_lines(NOUNS, "n")),
    ("data.verb", data_lines(VERBS, "v")),
    ("index.verb", index_lines(VERBS, "v")),
]:
    with open(os.path.join(wn, name), "w") as f:
        f.write(text)

write_json(
    "config.json",
    {
        "real": "real.json",
        "simulated": ["sim-a.json", "sim-b.json"],
        "qrels": "qrels.txt",
        "wordnet_dir": "wordnet",
        "embeddings": {"kind": "precomputed", "location": "embeddings.jsonl", "model_id": "toy-hash-8"},
        "pairing": "one-to-many",
        "k": 10,
        "efa": {"columns": ["query_length_terms", "jaccard", "cosine", "ndcg", "precision", "rbo"]},
        "bootstrap": {"iterations": 1000},
        "seed": 42,
        "out": "out",
    },
)
