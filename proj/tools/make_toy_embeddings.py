#!/usr/bin/env python3
"""Writes the small word-vector table used for weak unification in tests and the fixture run.

Related words share a group vector plus a little noise, so inflections and
near-synonyms score high and unrelated words stay close to orthogonal.
Function words get short vectors so content words dominate phrase means.
"""
import argparse

import numpy as np

DIM = 32
SEED = 20240

GROUPS = [
    "wet soaked soak soaking damp moist moisture",
    "water waters watered watering liquid",
    "rain rained raining rainy",
    "shower showers showered",
    "flood flooded flooding",
    "pool pooled lake",
    "hair hairs",
    "drink drinks drank spilled spill splash splashed",
    "book books read reading",
    "glass glasses",
    "drop dropped drops fall fell falls",
    "break broke broken breaks shattered shatter shatters",
    "floor floors ground",
    "milk",
    "fill filled fills pour poured",
    "plant plants planted",
    "wither withered withers wilt wilted",
    "dry dried dries",
    "window windows",
    "sun sunlight sunny",
    "heat heated hot warm overheat overheated",
    "drive driver drivers driving",
    "police officer officers",
    "pull pulled stop stopped",
    "red light lights",
    "fuel gas",
    "car cars",
    "hurry rushing rushed",
    "tired exhausted weary fatigue",
    "sleep slept sleeping asleep",
    "night overnight",
    "shoe shoes",
    "buy bought buying",
    "walk walked walking walks",
    "leg legs",
    "ache ached aching sore",
    "ice",
    "cube cubes",
    "melt melted melts melting",
    "grow grew grows growing grown",
    "expand expanded expanding larger bigger",
    "baby babies infant",
    "cry crying cried cries",
    "hungry hunger",
    "food meal",
    "want wanted",
    "noise noises loud sound",
    "wake woke woken waking awake",
    "scared frightened afraid fear",
    "student students",
    "study studied studying",
    "exam exams test",
    "pass passed passing",
    "forget forgot forgotten forgetting",
    "date dates calendar",
    "know knew knowing knowledge",
    "answer answered answers",
    "correct correctly",
    "power electricity electric",
    "dark darkness",
    "room rooms",
    "turn turned turns",
    "door doors",
    "open opened opening",
    "wind gust",
    "candle candles flame",
    "blow blew blown",
    "dog dogs",
    "thunder storm",
    "hear heard hearing",
    "learn learned learns",
    "trick tricks",
    "train trained training teach taught",
    "hide hid hidden",
    "bed beds",
    "curious",
    "balloon balloons",
    "deflate deflated deflates deflating",
    "prick pricked pricking",
    "needle needles pin",
    "hole holes",
    "air",
    "escape escapes escaped leak leaked leaks",
    "tie tied ties",
    "ribbon ribbons",
    "knot knots",
    "loose loosened",
    "kick kicked kicks",
    "ball balls",
    "hit hits struck strikes",
    "wall walls",
    "paint painted repainted",
    "scratch scratched",
    "bread breads loaf",
    "mold moldy mould",
    "spore spores",
    "bake baked baking",
    "left",
    "week weeks",
    "fresh",
    "farmer farmers",
    "seed seeds",
    "sprout sprouted",
    "field fields",
    "crop crops",
    "soil dirt",
    "irrigate irrigated irrigation",
    "street streets road",
    "drain drains",
    "block blocked",
    "chef cook cooks cooked cooking",
    "salt salty",
    "soup soups",
    "taste tasted",
    "sugar sweet",
    "runner run ran running runs",
    "breath breathe breathing breathed",
    "sit sat sitting",
    "couch sofa",
    "marathon race",
    "exert exerted exertion",
    "stress stressed overwhelmed",
    "umbrella",
    "man men",
    "cover covered",
    "shop shops mall store",
    "lottery",
    "ticket tickets",
    "win won winning",
    "phone phones",
    "battery batteries",
    "die died dies dead",
    "charge charged charging",
    "drain drained draining",
    "use used using",
    "damage damaged",
    "girl girls",
    "woman women",
    "boy boys",
    "child children",
    "touch touched touching",
    "stove oven",
    "burn burned burns burnt",
    "hand hands",
    "dinner",
    "transfer transferred",
]

FUNCTION_WORDS = (
    "a an the s is was were be been being are am to of in on at by for with from it its "
    "he she him her his they them their this that these those and or but so not no up out "
    "over under into onto toward all some someone has have had did do does may might could "
    "would can will too much very"
).split()


def build():
    rng = np.random.default_rng(SEED)
    rows = {}
    for group in GROUPS:
        base = rng.standard_normal(DIM)
        for word in group.split():
            if word in rows:
                continue
            rows[word] = base + 0.35 * rng.standard_normal(DIM)
    for word in FUNCTION_WORDS:
        if word not in rows:
            rows[word] = 0.15 * rng.standard_normal(DIM)
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    args = ap.parse_args()
    rows = build()
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"d={DIM}\n")
        for word in sorted(rows):
            f.write(word + " " + " ".join(f"{x:.6f}" for x in rows[word]) + "\n")


if __name__ == "__main__":
    main()
