"""Regenerate the bundled fixture melodies in src/lyricforge/data/melodies/."""

import random
from pathlib import Path

from lyricforge.melody import Melody, Note, dump_melody_json

OUT = Path(__file__).resolve().parents[1] / "src" / "lyricforge" / "data" / "melodies"
TPB = 480
# rhythmic cells in ticks; mixing long and short values gives stress contrast
CELLS = [
    [480, 240, 240],
    [720, 240],
    [240, 240, 480],
    [960],
    [480, 480],
    [360, 120, 480],
    [240, 240, 240, 240],
]


def make_melody(rng: random.Random) -> Melody:
    notes = []
    t = 0
    pitch = rng.randint(57, 69)
    for _ in range(rng.randint(3, 6)):
        target = rng.randint(5, 12)
        count = 0
        while count < target:
            for d in rng.choice(CELLS):
                if count == target:
                    break
                pitch = min(84, max(48, pitch + rng.choice([-2, -1, 0, 1, 2, 3, -3])))
                notes.append(Note(t, d, pitch))
                t += d
                count += 1
        rest = rng.choice([480, 960])
        notes.append(Note(t, rest, None))
        t += rest
    return Melody(TPB, tuple(notes))


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(2023)
    for i in range(20):
        (OUT / f"melody_{i:02d}.json").write_text(dump_melody_json(make_melody(rng)))
    # hand-written shipped example: two phrases with explicit annotations
    sample = Melody(
        TPB,
        (
            Note(0, 480, 60), Note(480, 240, 62), Note(720, 480, 64), Note(1200, 240, 62),
            Note(1440, 960, 60), Note(2400, 480, None),
            Note(2880, 240, 67), Note(3120, 240, 65), Note(3360, 480, 64), Note(3840, 240, 62),
            Note(4080, 480, 60), Note(4560, 960, 60),
        ),
    )
    (OUT / "sample.json").write_text(dump_melody_json(sample))


if __name__ == "__main__":
    main()
