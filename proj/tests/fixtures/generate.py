#!/usr/bin/env python3
"""Regenerates the bundled synthetic fixtures. Output is deterministic."""

import csv
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
START = 1577836800  # 2020-01-01T00:00:00Z
BARS = 500

WORDS = {
    "moon": (7.9, 6.1, 6.4),
    "pump": (6.2, 6.8, 6.0),
    "gain": (7.2, 5.3, 6.6),
    "happy": (8.5, 6.1, 7.2),
    "love": (8.0, 5.4, 5.9),
    "crash": (2.3, 6.9, 3.6),
    "dump": (2.9, 5.1, 4.2),
    "fear": (2.9, 6.1, 3.3),
    "loss": (2.2, 5.0, 3.4),
    "sad": (2.1, 3.5, 3.8),
    "hold": (5.6, 3.4, 5.9),
    "price": (5.5, 4.3, 5.7),
    "market": (5.7, 4.2, 5.8),
    "fix": (6.3, 3.9, 6.2),
    "bug": (3.1, 4.6, 4.5),
}
FILLER = ["the", "is", "today", "btc", "again", "we", "this", "commit"]


def candles(rng):
    rows = []
    close = 7200.0
    for i in range(BARS):
        open_ = round(close * (1 + rng.gauss(0, 0.0008)), 2)
        close = round(open_ * (1 + rng.gauss(0, 0.004)), 2)
        high = round(max(open_, close) * (1 + abs(rng.gauss(0, 0.002))), 2)
        low = round(min(open_, close) * (1 - abs(rng.gauss(0, 0.002))), 2)
        volume = round(abs(rng.gauss(350, 120)) + 1, 4)
        rows.append((START + 3600 * i, open_, high, low, close, volume))
    with open(HERE / "synthetic_500h.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["timestamp", "open", "high", "low", "close", "volume"])
        w.writerows(rows)


def affect(rng):
    records, comments = [], []
    for i in range(BARS):
        hour = START + 3600 * i
        for source, channel, count in (("reddit", "bitcoin", rng.randint(1, 3)), ("github", "bitcoin", rng.randint(0, 1))):
            for _ in range(count):
                ts = hour + rng.randrange(3600)
                words = rng.sample(sorted(WORDS), 2) + rng.sample(FILLER, 2)
                rng.shuffle(words)
                text = " ".join(words)
                if rng.random() < 0.2:
                    text = text.capitalize() + ", really!"
                hits = [WORDS[w] for w in words if w in WORDS]
                vad = [round(sum(h[k] for h in hits) / len(hits), 4) for k in range(3)]
                records.append((ts, source, channel, rng.choice([-1, 0, 1]), rng.randint(0, 2), rng.randint(0, 2),
                                rng.randint(0, 1), rng.randint(0, 1), *vad))
                comments.append((ts, source, channel, text))
    order = sorted(range(len(records)), key=lambda k: records[k][0])
    with open(HERE / "affect_500h.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["timestamp", "source", "channel", "sentiment", "love", "joy", "anger", "sadness", "valence",
                    "arousal", "dominance"])
        w.writerows(records[k] for k in order)
    with open(HERE / "comments_500h.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["timestamp", "source", "channel", "text"])
        w.writerows(comments[k] for k in order)
    with open(HERE / "lexicon.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["token", "valence", "arousal", "dominance"])
        w.writerows((k, *v) for k, v in sorted(WORDS.items()))


if __name__ == "__main__":
    rng = random.Random(20200101)
    candles(rng)
    affect(rng)
