#!/usr/bin/env python3
"""Regenerate the synthetic evaluation fixtures under tests/fixtures/.

The records are built from fixed word tables so the files are fully
deterministic; each sample's role (true positive, boundary case, ...) is
chosen by construction and cross-checked by the oracle suite. Run from the
repository root:

  python scripts/gen_synthetic_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# Disjoint word pools: knowledge entities never collide with the fabricated
# ones, so coverage arithmetic per sample is exact by construction.
FILM_A = ["Solar", "Crimson", "Silent", "Golden", "Frozen", "Hidden", "Broken", "Sacred", "Savage", "Velvet"]
FILM_B = ["Dawn", "Harbor", "Empire", "Garden", "Summit", "Voyage", "Canyon", "Fortress", "Mirage", "Outpost"]
DIRECTOR_A = ["Mira", "Omar", "Lena", "Viktor", "Anya", "Tomas", "Ingrid", "Rafael", "Sofia", "Henrik"]
DIRECTOR_B = ["Chen", "Reyes", "Okafor", "Lindqvist", "Moreau", "Castellano", "Varga", "Duarte", "Kowalski", "Abadi"]
ACTOR_A = ["Bruno", "Celia", "Darius", "Elena", "Farid", "Greta", "Hassan", "Iris", "Jonas", "Katya"]
ACTOR_B = ["Mancini", "Petrov", "Sandoval", "Takahashi", "Umarov", "Weiss", "Yilmaz", "Zielinski", "Brandt", "Costa"]
WRONG_A = ["Quentin", "Beatrix", "Caspian", "Delphine", "Edmund", "Fiona", "Gideon", "Harriet", "Ignatius", "Josephine"]
WRONG_B = ["Thornquist", "Abernathy", "Vanterpool", "Greenhalgh", "Fairweather", "Montgomery", "Ravensworth", "Applegate", "Winterbourne", "Silverstein"]


def _qa_records() -> list[dict]:
    records = []
    for i in range(50):
        film = f"{FILM_A[i // 10]} {FILM_B[i % 10]}"
        director = f"{DIRECTOR_A[i // 10]} {DIRECTOR_B[i % 10]}"
        actor = f"{ACTOR_A[i // 10]} {ACTOR_B[i % 10]}"
        wrong = f"{WRONG_A[i % 10]} {WRONG_B[(i + 3) % 10]}"
        year = 1950 + i
        knowledge = (
            f"The film {film} was directed by {director} in {year}. "
            f"It starred {actor} as the lead."
        )
        question = f"Who directed the film {film}?"

        if i <= 21:  # faithful, full coverage -> true negative
            generation = f"The film {film} was directed by {director}."
            gold = "faithful"
        elif i == 22:  # faithful, coverage exactly 0.5 -> boundary true negative
            generation = f"{director} made movies."
            gold = "faithful"
        elif i == 23:  # faithful paraphrase with fresh vocabulary -> false positive
            generation = "A celebrated auteur helmed the production."
            gold = "faithful"
        elif i <= 45:  # fabricated director -> true positive
            if i % 2 == 0:
                generation = f"It was directed by {wrong}."
            else:
                generation = f"The director was {wrong}."
            gold = "hallucinated"
        elif i == 46:  # wrong year only, high coverage -> false negative
            generation = f"The film {film} was directed by {director} in 1887."
            gold = "hallucinated"
        elif i == 47:  # negated claim, score exactly 0.5 -> boundary false negative
            generation = f"The film {film} was not directed by {director}."
            gold = "hallucinated"
        else:  # empty generation -> non-answer
            generation = ""
            gold = "hallucinated"

        records.append(
            {
                "id": f"qa{i:03d}",
                "knowledge": knowledge,
                "question": question,
                "generation": generation,
                "gold_label": gold,
            }
        )
    return records


LANDMARK_A = ["Brass", "Cedar", "Granite", "Willow", "Copper", "Marble", "Amber", "Juniper", "Cobalt", "Ivory"]
LANDMARK_B = ["Pavilion", "Atrium", "Gallery", "Rotunda", "Conservatory", "Colonnade", "Observatory", "Amphitheater", "Arcade", "Bastion"]
PERSON_A = ["Casimir", "Odette", "Laszlo", "Vivienne", "Barnaby", "Seraphina", "Thaddeus", "Rosalind", "Percival", "Genevieve"]
PERSON_B = ["Holloway", "Beaumont", "Kirkland", "Ashcroft", "Pemberton", "Waverly", "Lockwood", "Briarton", "Falkner", "Ellsworth"]
EVENTS = ["regatta", "masquerade", "symposium", "carnival", "jubilee", "exposition", "tournament", "festival", "gala", "pageant"]
FAKES = ["Velmora", "Thrandor", "Quillane", "Borovnik", "Zephyrine", "Maldrake", "Ostrevan", "Fennwick", "Juralith", "Cradonia"]


def _summarization_records() -> list[dict]:
    records = []
    for i in range(20):
        landmark1 = f"{LANDMARK_A[i % 10]} {LANDMARK_B[i % 10]}"
        landmark2 = f"{LANDMARK_A[(i + 3) % 10]} {LANDMARK_B[(i + 5) % 10]}"
        person = f"{PERSON_A[i % 10]} {PERSON_B[(i + 2) % 10]}"
        event = EVENTS[i % 10]
        fake = FAKES[i % 10]
        y1, y2, y3 = 1871 + i, 1902 + i, 1930 + i
        s1 = "Archivists found no gaps in the town ledger."
        s2 = f"The {landmark1} opened in {y1}."
        s3 = "It drew crowds from nearby villages."
        s4 = f"{person} designed the main gate."
        s5 = f"The {landmark2} hosted the {event} in {y2}."
        s6 = "Local farmers supplied the market stalls."
        s7 = f"The council funded repairs after the {y3} storm."
        knowledge = " ".join([s1, s2, s3, s4, s5, s6, s7])

        if i < 10:  # every sentence copied from the source -> faithful
            generation = " ".join([s1, s2, s4, s5])
            gold = "faithful"
        else:  # exactly one contradicted sentence with a fabricated venue
            bad = f"The {fake} hosted the {event} in {y2}, not the {landmark2}."
            generation = " ".join([s1, s2, s4, bad])
            gold = "hallucinated"

        records.append(
            {
                "id": f"sm{i:03d}",
                "knowledge": knowledge,
                "generation": generation,
                "gold_label": gold,
            }
        )
    return records


def _write(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {len(records)} records -> {path}")


def main() -> None:
    _write(FIXTURES / "qa_synthetic_50.jsonl", _qa_records())
    _write(FIXTURES / "summ_synthetic_20.jsonl", _summarization_records())


if __name__ == "__main__":
    main()
