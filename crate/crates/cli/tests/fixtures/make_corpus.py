"""Regenerates corpus_200.jsonl, a small dated corpus with known counts.

200 records dated 2020-01-17 .. 2021-03-13. In the year from 2020-01-17,
175 are inrikes/utrikes and 15 are lokalt; 10 fall after 2021-01-17.
"""
import datetime as dt
import json
import random
from pathlib import Path

SLICE_COUNTS = [10, 14, 40, 25, 20, 12, 8, 3, 6, 10, 12, 15]
START = dt.date(2020, 1, 17)

THEMES = {
    "halsa": "smitta smittspridning sjukhus intensivvård patienter covid provtagning symtom dödsfall region".split(),
    "ekonomi": "ekonomi arbetslöshet företag krisstöd permitteringar börsen riksbanken konkurser tillväxt handel".split(),
    "skola": "skolor gymnasiet distansundervisning elever lärare universitet studenter examen undervisning rektorer".split(),
    "varlden": "kina usa italien gränser who resor utrikesdepartementet flyg karantän europa".split(),
    "vaccin": "vaccin vaccinet vaccinering doser pfizer läkemedelsverket godkännande leveranser astrazeneca prioritering".split(),
}
FILLER = "och att det som en på är av för med till den har inte om ett de var men så vi sig från".split()
PHRASES = ["statsepidemiolog anders tegnell", "stefan löfven", "lena hallengren"]


def month_add(d, months):
    m = d.month - 1 + months
    return dt.date(d.year + m // 12, m % 12 + 1, d.day)


def theme_weights(t):
    # Health dominates spring; vaccines rise through the autumn.
    w = {"halsa": 4.0, "ekonomi": 2.0, "skola": 1.5, "varlden": 2.0, "vaccin": 0.2}
    if t >= 7:
        w["vaccin"] = 0.5 * (t - 5)
        w["varlden"] = 1.0
    return w


def body(rng, t, serial):
    weights = theme_weights(t)
    names = list(weights)
    main = rng.choices(names, [weights[n] for n in names])[0]
    words = []
    for _ in range(rng.randint(25, 40)):
        r = rng.random()
        if r < 0.55:
            words.append(rng.choice(THEMES[main]))
        elif r < 0.7:
            words.append(rng.choice(THEMES[rng.choice(names)]))
        else:
            words.append(rng.choice(FILLER))
    if rng.random() < 0.4:
        words.insert(rng.randrange(len(words)), rng.choice(PHRASES))
    words.append(f"ref{serial:04d}")
    title = " ".join(rng.sample(THEMES[main], 3)).capitalize()
    return title, " ".join(words).capitalize() + "."


def main():
    rng = random.Random(2020)
    records = []
    serial = 0

    def add(date, category, t):
        nonlocal serial
        title, text = body(rng, t, serial)
        records.append({
            "id": f"svt-{serial:04d}",
            "date": date.isoformat(),
            "category": category,
            "title": title,
            "body": text,
        })
        serial += 1

    for t, n in enumerate(SLICE_COUNTS):
        lo, hi = month_add(START, t), month_add(START, t + 1)
        span = (hi - lo).days
        days = sorted(rng.randrange(span) for _ in range(n))
        if t == 0:
            days[0] = 0
        for k, off in enumerate(days):
            add(lo + dt.timedelta(days=off), "inrikes" if k % 3 else "utrikes", t)

    for i in range(15):
        t = i % 12
        add(month_add(START, t) + dt.timedelta(days=3 + i), "lokalt", t)

    after = [dt.date(2021, 1, 17) + dt.timedelta(days=6 * i) for i in range(9)] + [dt.date(2021, 3, 13)]
    for i, d in enumerate(after):
        add(d, ["inrikes", "utrikes", "lokalt"][i % 3], 11)

    # File order is not date order; loading sorts.
    rng.shuffle(records)
    out = Path(__file__).with_name("corpus_200.jsonl")
    with out.open("w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
