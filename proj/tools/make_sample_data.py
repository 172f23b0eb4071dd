#!/usr/bin/env python3
"""Regenerates data/sample: a 5-document pair corpus and a 50-dim embedding
table covering its vocabulary. Topic words share a centroid so related terms
have similar vectors. Output is fully determined by SEED."""

import json
import random
import re
import sys
from pathlib import Path

SEED = 20240601
DIM = 50

DOCUMENTS = [
    ("heart disease",
     "Patients with chronic heart failure often present with coronary artery disease. The cardiology team "
     "measured blood pressure, cholesterol and cardiac output before surgery. Heart attack survivors who "
     "followed a cardiac rehabilitation program showed lower cholesterol and fewer arrhythmia episodes. "
     "Coronary stents restored blood flow in most patients, and cardiology follow up confirmed improved "
     "cardiac function and stable blood pressure."),
    ("export ban",
     "The commerce department imposed an export ban on the telecom supplier after sanctions violations. "
     "Chip exports to the company were halted, and the supplier warned that the export ban threatens its "
     "smartphone business. Trade officials said the sanctions would remain until the company replaced its "
     "management. Analysts expect chip suppliers to lose revenue while the export restrictions stay in force."),
    ("insulin diabetes",
     "Type two diabetes patients were randomized to insulin therapy or oral glucose lowering drugs. Blood "
     "glucose and insulin sensitivity improved in both groups, but insulin therapy reduced glucose spikes "
     "after meals. Diabetes educators monitored patients for hypoglycemia, and insulin doses were adjusted "
     "weekly. Long term glucose control lowered the risk of diabetes complications in the kidney and eye."),
    ("solar energy",
     "The utility installed solar panels across the desert plant, adding battery storage to smooth output. "
     "Solar generation peaked at noon while battery storage supplied the grid after sunset. Engineers "
     "reported that panel efficiency fell in dust storms, so cleaning robots now sweep the solar panels "
     "nightly. Grid operators credit the solar plant and its battery storage with lower evening prices."),
    ("football transfer",
     "The football club completed the transfer of the striker for a record fee after weeks of talks. The "
     "striker signed a five year contract, and the club said the transfer fee would be paid in installments. "
     "Rival clubs had bid for the striker during the transfer window, but the player chose the league "
     "champions. The manager expects the striker to start the next league match."),
]


def tokenize(text):
    return [t for t in re.split(r"[^0-9a-z]+", text.lower()) if t]


def main(out_dir):
    rng = random.Random(SEED)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    pairs = []
    topics = [t for t, _ in DOCUMENTS]
    for i, (topic, doc) in enumerate(DOCUMENTS):
        pairs.append({"query": topic, "document": doc, "label": 1})
        negative = rng.choice([t for t in topics if t != topic])
        pairs.append({"query": negative, "document": doc, "label": 0})
    with open(out / "pairs.jsonl", "w") as f:
        for p in pairs:
            f.write(json.dumps(p) + "\n")

    # Topic centroid per document; every word takes the centroid of the first
    # document it appears in plus noise.
    centroids = [[rng.gauss(0, 1) for _ in range(DIM)] for _ in DOCUMENTS]
    vectors = {}
    for (topic, doc), c in zip(DOCUMENTS, centroids):
        for tok in tokenize(topic) + tokenize(doc):
            if tok not in vectors:
                vectors[tok] = [x + rng.gauss(0, 0.7) for x in c]
    with open(out / "embeddings.txt", "w") as f:
        for tok in sorted(vectors):
            f.write(tok + " " + " ".join(f"{x:.6f}" for x in vectors[tok]) + "\n")

    with open(out / "stopwords.txt", "w") as f:
        f.write("# Extra stopwords for the sample corpus\n")
        for w in ["the", "a", "an", "and", "or", "of", "to", "in", "for", "with", "was", "were", "its", "it",
                  "after", "before", "while", "so", "but", "that", "is", "be", "by", "on", "at", "now", "said"]:
            f.write(w + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "sample")
