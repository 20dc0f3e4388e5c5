#!/usr/bin/env python3
"""Writes the synthetic demo corpus and its vector files.

Word vectors are pseudo-random per word (seeded by a hash of the word).
Sentence vectors are the normalized mean of a sentence's word vectors, so
sentences sharing words come out similar. Run from anywhere; files land next
to this script.
"""

import hashlib
import json
import math
import random
import re
from pathlib import Path

DIM = 16
HERE = Path(__file__).resolve().parent

GOLD = [
    ("AdviseWithoutPermission", "You should talk to a counselor about this ."),
    ("AdviseWithoutPermission", "You need to get more sleep at night ."),
    ("AdviseWithoutPermission", "try to learn from your mistakes and meet some new people ."),
    ("AdviseWithoutPermission", "I think you should write down how you feel ."),
    ("AdviseWithoutPermission", "You can try to go for a walk every morning ."),
    ("AdviseWithoutPermission", "Maybe you could call a friend tonight ."),
    ("AdviseWithoutPermission", "You should talk to your doctor about it ."),
    ("AdviseWithoutPermission", "I suggest you take a break from work ."),
    ("AdviseWithPermission", "It maybe helpful to talk to a counselor about this ."),
    ("AdviseWithPermission", "You may want to get more sleep at night ."),
    ("AdviseWithPermission", "I encourage you to write down how you feel ."),
    ("AdviseWithPermission", "Perhaps you can go for a walk every morning ."),
    ("AdviseWithPermission", "I wonder if you can call a friend tonight ."),
    ("AdviseWithPermission", "It may be important to take a break from work ."),
    ("AdviseWithPermission", "You may want to consider talking to your doctor ."),
    ("AdviseWithPermission", "I would encourage you to meet some new people ."),
    ("Support", "I am here for you and I care about you ."),
    ("Support", "I am here for you whenever you need ."),
    ("Support", "I am so sorry you are going through this ."),
    ("Support", "That sounds really hard and I am here for you ."),
    ("Affirm", "You have done a great job so far ."),
    ("Affirm", "You have done a great job asking for help ."),
    ("Affirm", "That took a lot of courage ."),
    ("OpenQuestion", "What do you think about that ?"),
    ("OpenQuestion", "How do you feel about that ?"),
    ("OpenQuestion", "What do you think might help ?"),
    ("OpenQuestion", "How do you feel about your progress ?"),
    ("ClosedQuestion", "Do you have someone to talk to ?"),
    ("ClosedQuestion", "Do you have a support network ?"),
    ("ClosedQuestion", "Is that right ?"),
    ("SimpleReflection", "It sounds like you are feeling overwhelmed ."),
    ("SimpleReflection", "It sounds like you are feeling lonely ."),
    ("SimpleReflection", "It sounds like work is stressful ."),
    ("GiveInformation", "Many people find that exercise improves mood ."),
    ("GiveInformation", "Many people find that sleep improves mood ."),
    ("GiveInformation", "Therapy is often covered by insurance ."),
    ("EmphasizeAutonomy", "It is your choice and you know best ."),
    ("EmphasizeAutonomy", "It is your choice what you do next ."),
    ("Warn", "If you keep drinking you could get hurt ."),
    ("SelfDisclose", "I have felt that way myself ."),
]

POOL = [
    "I am here for you no matter what .",
    "It sounds like you are feeling anxious .",
    "You should talk to a friend about this .",
    "How do you feel about that situation ?",
    "You have done a great job today .",
    "Many people find that walking improves mood .",
    "It is your choice and nobody else's .",
    "What do you think about that plan ?",
    "You need to get more exercise .",
    "I suggest you take a day off .",
    "Do you have someone to call ?",
    "It may be important to rest .",
    "The weather was nice yesterday .",
    "My cat likes to sleep on the couch .",
    "You should try to meet some new people .",
    "I encourage you to write a letter .",
    "That sounds really hard for you .",
    "Do you have a plan for tomorrow ?",
    "Maybe you could join a support group .",
    "It sounds like you are feeling overwhelmed at work .",
]

MARKER_WORDS = (
    "it maybe helpful to you may want i encourage perhaps can if would like good idea "
    "be important wonder maybe is an option consider recommend , . talking calling "
    "going getting writing taking meeting trying"
)


def tokens(text):
    return re.findall(r"\w+(?:'\w+)?|[^\w\s]", text.lower())


def word_vector(word):
    seed = int.from_bytes(hashlib.sha256(word.encode("utf-8")).digest()[:8], "little")
    rng = random.Random(seed)
    return [rng.gauss(0.0, 1.0) for _ in range(DIM)]


def fmt(v):
    return " ".join(f"{x:.6f}" for x in v)


def sentence_vector(text):
    vs = [word_vector(t) for t in tokens(text)]
    mean = [sum(col) / len(vs) for col in zip(*vs)]
    n = math.sqrt(sum(x * x for x in mean))
    return [x / n for x in mean]


def main():
    gold = [
        {"id": f"g{i:02d}", "text": t, "label": lab, "provenance": "gold", "source": "other"}
        for i, (lab, t) in enumerate(GOLD)
    ]
    pool = [
        {"id": f"u{i:02d}", "text": t, "label": None, "provenance": "ngram", "source": "other"}
        for i, t in enumerate(POOL)
    ]
    with open(HERE / "gold.jsonl", "w") as f:
        for r in gold:
            f.write(json.dumps(r) + "\n")
    with open(HERE / "pool.jsonl", "w") as f:
        for r in pool:
            f.write(json.dumps(r) + "\n")

    with open(HERE / "sentence_vectors.txt", "w") as f:
        f.write(f"{DIM}\n")
        for r in gold + pool:
            f.write(f"{r['id']}\t{fmt(sentence_vector(r['text']))}\n")

    vocab = set(MARKER_WORDS.split())
    for r in gold + pool:
        vocab.update(tokens(r["text"]))
    with open(HERE / "word_vectors.txt", "w") as f:
        f.write(f"{DIM}\n")
        for w in sorted(vocab):
            f.write(f"{w}\t{fmt(word_vector(w))}\n")


if __name__ == "__main__":
    main()
