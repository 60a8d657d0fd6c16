"""Melody-constrained lyric generation: compile a melody into syllable and
stress constraints, then decode lyrics under them with a pluggable LM."""

from .constraint import ConstraintProgram, LineConstraint, RhythmToken, compile_constraints, rhythm_satisfies
from .decode import DecoderConfig, LyricSheet, apply_rhythm_factor, feasible_words, generate_lyrics
from .errors import InvalidInputError, LyricforgeError
from .lm import LanguageModel, NGramModel, perplexity, train_ngram
from .melody import Melody, Note, Phrase, parse_melody_json, segment_phrases
from .metrics import EvaluationReport, evaluate
from .midi import parse_midi
from .phonetics import PronouncingDictionary, Pronunciation, StressMark, fallback_syllables, load_dictionary, lookup_stress
from .plan import GenerationRequest, Plan, extract_keywords, make_plan

__version__ = "0.1.0"
