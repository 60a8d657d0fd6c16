"""One test per acceptance criterion; each records a pass/fail line for the summary."""

import itertools
import math
import random
import re
import time

import pytest

from conftest import ACCEPTANCE_RESULTS, DATA, TableLM, fixture_melodies, toy_dictionary
from lyricforge.constraint import (
    ConstraintProgram,
    LineConstraint,
    RhythmToken,
    compile_constraints,
    parse_rhythm,
    rhythm_satisfies,
)
from lyricforge.decode import (
    DecoderConfig,
    GenerationError,
    LyricSheet,
    apply_rhythm_factor,
    generate_lyrics,
    generate_truncated,
)
from lyricforge.errors import InvalidInputError
from lyricforge.lm import BOS, EOL, EOS, LanguageModel, perplexity, train_ngram
from lyricforge.melody import Melody, Note, dump_melody_json, parse_melody_json, segment_phrases
from lyricforge.metrics import (
    bleu,
    cropped_ratio,
    distinct_n,
    is_cropped,
    salient_coverage,
    stress_duration_rate,
)
from lyricforge.midi import MidiFormatError, UnsupportedMidiError, parse_midi
from lyricforge.phonetics import StressMark
from lyricforge.plan import GenerationRequest, Plan, make_plan


def record(number, name, passed, detail):
    ACCEPTANCE_RESULTS.append((number, name, bool(passed), detail))
    print(f"[{'PASS' if passed else 'FAIL'}] {number}. {name}: {detail}")
    assert passed, detail


@pytest.fixture(scope="module")
def raw_syllables():
    """Syllable counts straight from the stress digits of the bundled file."""
    counts = {}
    for line in (DATA / "cmudict-sample.txt").read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith(";;;"):
            continue
        head, phones = line.split("  ", 1)
        if "(" in head:
            continue
        counts[head.lower()] = len(re.findall(r"\d", phones))
    return counts


@pytest.fixture(scope="module")
def request_():
    return GenerationRequest("Winter Night", ("snow", "river", "memories"))


def suite_programs(band):
    return [compile_constraints(segment_phrases(m), wildcard_band=band) for m in fixture_melodies()]


def test_1_syllable_success_rate(cmudict, corpus_model, raw_syllables):
    rng = random.Random(2023)
    programs = []
    for _ in range(200):
        lines = []
        for _ in range(rng.randint(2, 8)):
            budget = rng.randint(4, 14)
            lines.append(LineConstraint(budget, tuple(rng.choice(list(RhythmToken)) for _ in range(budget))))
        programs.append(ConstraintProgram(tuple(lines)))
    start = time.perf_counter()
    succeeded = exact = produced = 0
    for i, prog in enumerate(programs):
        plan = Plan(tuple(() for _ in prog.lines))
        try:
            sheet = generate_lyrics(plan, prog, corpus_model, cmudict, DecoderConfig(seed=i))
        except GenerationError:
            continue
        succeeded += 1
        for words, line in zip(sheet.lines, prog.lines):
            produced += 1
            exact += sum(raw_syllables[w] for w in words) == line.syllable_budget
    elapsed = time.perf_counter() - start
    passed = exact == produced and succeeded / len(programs) >= 0.95 and elapsed < 60
    record(
        1,
        "syllable success rate",
        passed,
        f"{succeeded}/200 programs generated, {exact}/{produced} lines exact, {elapsed:.1f}s (limit 60s)",
    )


def test_2_hard_rhythm_compliance(cmudict, corpus_model, request_):
    cfg = DecoderConfig(rhythm_mode="hard", monosyllable_policy="strict")
    rates = []
    for prog in suite_programs(band=0):
        plan = make_plan(request_, prog, cmudict)
        try:
            sheet = generate_lyrics(plan, prog, corpus_model, cmudict, cfg)
        except GenerationError as exc:
            rates.append(f"error: {exc}")
            continue
        # score the serialized sheet, as a user of the file would
        reread = LyricSheet.from_json(sheet.to_json())
        rates.append(stress_duration_rate(reread, prog, cmudict, scope="non_wildcard"))
    passed = all(r == 1.0 for r in rates)
    bad = [r for r in rates if r != 1.0]
    record(2, "hard rhythm compliance", passed, f"{rates.count(1.0)}/20 melodies at rate 1.0" + (f", failures {bad}" if bad else ""))


def _suite_rates(cmudict, model, request_, mode):
    rates = []
    for prog in suite_programs(band=0.05):
        plan = make_plan(request_, prog, cmudict)
        for seed in range(5):
            cfg = DecoderConfig(rhythm_mode=mode, alpha=0.01, seed=seed, strategy="sample")
            sheet = generate_lyrics(plan, prog, model, cmudict, cfg)
            rates.append(stress_duration_rate(sheet, prog, cmudict))
    return rates


def test_3_soft_mode_direction(cmudict, corpus_model, request_):
    start = time.perf_counter()
    soft = _suite_rates(cmudict, corpus_model, request_, "soft")
    off = _suite_rates(cmudict, corpus_model, request_, "off")
    elapsed = time.perf_counter() - start
    mean_soft, mean_off = sum(soft) / len(soft), sum(off) / len(off)
    passed = mean_soft > mean_off and elapsed < 300
    record(
        3,
        "soft-mode direction",
        passed,
        f"mean rate soft {mean_soft:.3f} vs off {mean_off:.3f} over {len(soft)} runs, {elapsed:.1f}s (limit 300s)",
    )


def test_4_cropped_sentences(cmudict, corpus_model, request_):
    ours, naive = [], []
    for prog in suite_programs(band=0.05):
        plan = make_plan(request_, prog, cmudict)
        for seed in range(5):
            ours += generate_lyrics(plan, prog, corpus_model, cmudict, DecoderConfig(seed=seed)).lines
            naive += generate_truncated(prog, corpus_model, cmudict, seed=seed)
    r_ours, r_naive = cropped_ratio(ours), cropped_ratio(naive)
    record(
        4,
        "cropped-sentence improvement",
        r_ours < r_naive,
        f"decoder {r_ours:.1%} vs truncating baseline {r_naive:.1%} over {len(ours)} lines",
    )


def test_5_metric_exactness(cmudict):
    tol = 1e-9
    toy = toy_dictionary({"river": "R IH1 V ER0", "la": "L AA1"})

    def prog(r):
        return ConstraintProgram((LineConstraint(len(r), parse_rhythm(r)),))

    lala = train_ngram(["la la"], order=2, k=0)
    uniform = TableLM({w: 0.2 for w in ["a", "b", "c", "d", EOL]})
    checks = {
        "bleu identical": (bleu(["the cat sat"], ["the cat sat"], "corpus"), 1.0),
        "bleu sentence": (bleu(["the cat sat on the mat"], ["the cat is on the mat"], "sentence"), (48 / 840) ** 0.25),
        "bleu corpus": (bleu(["a b c d", "a b c e"], ["a b c d", "a b c d"], "corpus"), (7 / 8 * 5 / 6 * 3 / 4 * 1 / 2) ** 0.25),
        "bleu brevity": (bleu(["a b c"], ["a b c x y z"], "corpus"), math.exp(-1)),
        "distinct-1": (distinct_n(["la la la land"], 1), 0.5),
        "distinct-2": (distinct_n(["la la la land"], 2), 2 / 3),
        "distinct unique": (distinct_n(["every word is new"], 1), 1.0),
        "perplexity la la": (perplexity(lala, [["la", "la"]]), 4 ** (1 / 3)),
        "perplexity uniform": (perplexity(uniform, [["a", "b"], ["c"]]), 5.0),
        "coverage 2/3": (salient_coverage([["snow", "on", "tree"]], ["snow", "tree", "night"]), 2 / 3),
        "coverage all": (salient_coverage([["snow", "tree"]], ["snow", "tree"]), 1.0),
        "coverage none": (salient_coverage([["snow"]], ["moon"]), 0.0),
        "stress SU on SU": (stress_duration_rate(LyricSheet([["river"]], None, 0.0), prog("SU"), toy), 1.0),
        "stress SU on US": (stress_duration_rate(LyricSheet([["river"]], None, 0.0), prog("US"), toy), 0.0),
        "stress S on Any": (stress_duration_rate(LyricSheet([["la"]], None, 0.0), prog("*"), toy, "all"), 1.0),
    }
    misses = {k: v for k, (v, e) in checks.items() if not abs(v - e) <= tol}
    example_lines = [
        is_cropped("Cause the Christmas gift was for"),
        is_cropped("And then I saw you my"),
        is_cropped("Someday the tree is grown with other memories"),
    ]
    passed = not misses and example_lines == [True, True, False]
    record(
        5,
        "metric exactness",
        passed,
        f"{len(checks) - len(misses)}/{len(checks)} values within 1e-9; example lines cropped = {example_lines}"
        + (f"; misses {misses}" if misses else ""),
    )


def test_6_rhythm_factor():
    examples = [
        apply_rhythm_factor(0.2, True, 0.01) == 0.2,
        apply_rhythm_factor(0.2, False, 0.01) == 0.2 * 0.01,
        apply_rhythm_factor(0.2, False, 0.0) == 0.0,
    ]
    rejected = 0
    for alpha in (-0.01, 1.01, 1.5):
        try:
            apply_rhythm_factor(0.2, False, alpha)
        except InvalidInputError:
            rejected += 1
        try:
            DecoderConfig(alpha=alpha)
        except InvalidInputError:
            rejected += 1
    passed = all(examples) and rejected == 6
    record(6, "rhythm factor suite", passed, f"{sum(examples)}/3 examples exact, {rejected}/6 bad alphas rejected")


class _BigramTable(LanguageModel):
    def __init__(self, words, seed):
        self.words = list(words)
        self.vocabulary = frozenset(self.words)
        self.tokens = self.words + [EOL, EOS]
        self.seed = seed

    def next_distribution(self, context):
        rng = random.Random(f"{self.seed}:{context[-1] if context else BOS}")
        raw = [rng.random() + 0.01 for _ in self.tokens]
        z = sum(raw)
        return {t: r / z for t, r in zip(self.tokens, raw)}


def _brute_force(lm, prons, history, budget):
    best = None
    for n in range(1, budget + 1):
        for seq in itertools.product(sorted(lm.words), repeat=n):
            if sum(prons[w] for w in seq) != budget:
                continue
            ctx, logp = list(history), 0.0
            for tok in list(seq) + [EOL]:
                logp += math.log(lm.next_distribution(ctx)[tok])
                ctx.append(tok)
            if best is None or (-logp, seq) < best:
                best = (-logp, seq)
    return best


def test_7_oracle_equivalence():
    # exhaustive strict-policy rhythm checks
    cases = agree = 0
    for n in range(1, 5):
        for pattern in itertools.product([StressMark.STRESSED, StressMark.UNSTRESSED], repeat=n):
            for slice_ in itertools.product(list(RhythmToken), repeat=n):
                expected = all(t is RhythmToken.ANY or t.value == m.value for m, t in zip(pattern, slice_))
                cases += 1
                agree += rhythm_satisfies(pattern, slice_, "strict") == expected

    bank = {
        "la": "L AA1", "ti": "T IY0", "do": "D OW1", "me": "M IY0",
        "river": "R IH1 V ER0", "again": "AH0 G EH1 N",
        "forever": "F ER0 EH1 V ER0", "yesterday": "Y EH1 S T ER0 D EY2",
    }
    rng = random.Random(11)
    trials = matched = 0
    for trial in range(40):
        words = rng.sample(sorted(bank), rng.randint(1, 8))
        d = toy_dictionary({w: bank[w] for w in words})
        prons = {w: d[w][0].syllable_count for w in words}
        budgets = [rng.randint(1, 4) for _ in range(rng.randint(1, 3))]
        prog = ConstraintProgram(tuple(LineConstraint(b, parse_rhythm("*" * b)) for b in budgets))
        lm = _BigramTable(words, trial)
        # lines no word combination can fill are skipped by the oracle as well
        if any(_brute_force(lm, prons, [BOS], b) is None for b in budgets):
            continue
        trials += 1
        cfg = DecoderConfig(rhythm_mode="off", beam_width=10_000, top_k=len(words) + 2)
        sheet = generate_lyrics(Plan(tuple(() for _ in budgets)), prog, lm, d, cfg)
        history, ok = [], True
        for line, b in zip(sheet.lines, budgets):
            history.append(BOS)
            best = _brute_force(lm, prons, history, b)
            ok &= line == list(best[1])
            history += list(best[1]) + [EOL]
        matched += ok
    passed = agree == cases == 1554 and matched == trials > 0
    record(
        7,
        "oracle equivalence",
        passed,
        f"rhythm check {agree}/{cases} enumerated cases; off-mode decode = brute force on {matched}/{trials} problems",
    )


def test_8_parser_fixtures():
    smf = bytes.fromhex(
        "4D546864 00000006 0000 0001 01E0 4D54726B 0000000D 00 90 3C 40 83 60 80 3C 40 00 FF 2F 00"
    )
    parsed = parse_midi(smf).notes == (Note(0, 480, 60),)
    try:
        parse_midi(b"MThX" + smf[4:])
        magic = False
    except MidiFormatError:
        magic = True
    try:
        parse_midi(smf[:12] + bytes.fromhex("E728") + smf[14:])
        smpte = False
    except UnsupportedMidiError:
        smpte = True
    texts = [(DATA / "melodies" / f"melody_{i:02d}.json").read_text(encoding="utf-8") for i in range(20)]
    texts.append((DATA / "melodies" / "sample.json").read_text(encoding="utf-8"))
    round_trip = all(dump_melody_json(parse_melody_json(t)) == t for t in texts)
    synthetic = Melody(96, (Note(0, 96, 60), Note(96, 48, None), Note(200, 10, 127)))
    round_trip &= dump_melody_json(parse_melody_json(dump_melody_json(synthetic))) == dump_melody_json(synthetic)
    passed = parsed and magic and smpte and round_trip
    record(
        8,
        "parser fixtures",
        passed,
        f"SMF note {'ok' if parsed else 'wrong'}, bad magic {'rejected' if magic else 'accepted'}, "
        f"SMPTE {'rejected' if smpte else 'accepted'}, JSON round trip {'bit-exact' if round_trip else 'differs'}",
    )
