"""Moral lexica: loading, querying and stem expansion.

Two on-disk formats are supported. The MoralStrength format is a TSV with a
1-9 moral valence per (lemma, pos, trait); the MFD format lists literal
lemmas or ``stem*`` wildcard patterns tagged with a trait and a polarity.
"""

from __future__ import annotations

import bisect
import enum
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional


class Trait(str, enum.Enum):
    CARE = "care"
    FAIRNESS = "fairness"
    LOYALTY = "loyalty"
    AUTHORITY = "authority"
    PURITY = "purity"
    NON_MORAL = "non-moral"

    @classmethod
    def parse(cls, text: str) -> "Trait":
        key = text.strip().lower().replace("_", "-").replace(" ", "-")
        key = _TRAIT_ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown moral trait {text!r}") from None


_TRAIT_ALIASES = {
    "nonmoral": "non-moral",
    "nm": "non-moral",
    "no-moral": "non-moral",
    "harm": "care",
    "care/harm": "care",
    "fairness/cheating": "fairness",
    "loyalty/betrayal": "loyalty",
    "authority/subversion": "authority",
    "purity/degradation": "purity",
}

#: The five foundations, in canonical order. ``Trait.NON_MORAL`` is only a label.
MORAL_TRAITS: tuple[Trait, ...] = (
    Trait.CARE,
    Trait.FAIRNESS,
    Trait.LOYALTY,
    Trait.AUTHORITY,
    Trait.PURITY,
)
ALL_LABELS: tuple[Trait, ...] = MORAL_TRAITS + (Trait.NON_MORAL,)


class Polarity(str, enum.Enum):
    VIRTUE = "virtue"
    VICE = "vice"
    GENERAL = "general"

    @classmethod
    def parse(cls, text: str) -> "Polarity":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown polarity {text!r}") from None


POS_TAGS = ("n", "v", "a", "r", "unknown")
NEUTRAL = 5.0
# Score implied by a polarity label when an entry carries no rating (MFD rows).
POLE_SCORE = {Polarity.VIRTUE: 9.0, Polarity.VICE: 1.0, Polarity.GENERAL: NEUTRAL}

# Published (virtue, vice) lemma counts per trait for the full lexicon.
PUBLISHED_COUNTS: dict[Trait, tuple[int, int]] = {
    Trait.CARE: (95, 85),
    Trait.FAIRNESS: (69, 57),
    Trait.LOYALTY: (99, 72),
    Trait.AUTHORITY: (160, 101),
    Trait.PURITY: (97, 161),
}


class LexiconError(ValueError):
    """Base class for lexicon file problems."""


class LexiconParseError(LexiconError):
    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class LexiconValidationError(LexiconError):
    pass


def _check_score(name: str, value: Optional[float]) -> None:
    if value is None:
        return
    if not (math.isfinite(value) and 1.0 <= value <= 9.0):
        raise LexiconValidationError(f"{name} {value} outside the 1-9 scale")


@dataclass(frozen=True, order=True)
class LexiconEntry:
    lemma: str
    pos: str
    trait: Optional[Trait]
    polarity: Polarity
    moral_valence: Optional[float] = None
    valence: Optional[float] = None
    arousal: Optional[float] = None
    wildcard: bool = False

    def __post_init__(self):
        if not self.lemma:
            raise LexiconValidationError("empty lemma")
        if self.lemma != self.lemma.lower():
            object.__setattr__(self, "lemma", self.lemma.lower())
        if self.pos not in POS_TAGS:
            raise LexiconValidationError(f"unknown part of speech {self.pos!r}")
        if self.trait is Trait.NON_MORAL:
            raise LexiconValidationError("non-moral is not a lexicon trait")
        if self.trait is None and self.polarity is not Polarity.GENERAL:
            raise LexiconValidationError(f"{self.lemma!r}: only general entries may lack a trait")
        for name in ("moral_valence", "valence", "arousal"):
            _check_score(name, getattr(self, name))

    @property
    def score(self) -> float:
        """Moral valence, falling back to the pole implied by the polarity."""
        if self.moral_valence is not None:
            return self.moral_valence
        return POLE_SCORE[self.polarity]

    @property
    def is_multiword(self) -> bool:
        return "_" in self.lemma or " " in self.lemma

    @property
    def key(self) -> tuple:
        return (self.lemma, self.pos, self.trait)


class Lexicon:
    """An immutable collection of lexicon entries with token lookup.

    ``lookup(token)`` returns one score per trait. When several entries of the
    same trait match a token (different parts of speech, or an exact lemma and
    a wildcard stem), exact matches win over wildcards, the longest stem wins
    among wildcards, and scores of equally specific entries are averaged.
    General-morality and multi-word entries never match tokens.
    """

    def __init__(self, entries: Iterable[LexiconEntry], name: str = "lexicon"):
        self.name = name
        entries = list(entries)
        seen = set()
        for e in entries:
            if e.key in seen:
                raise LexiconValidationError(f"duplicate entry {e.lemma}#{e.pos} for {e.trait}")
            seen.add(e.key)
        self.entries: tuple[LexiconEntry, ...] = tuple(sorted(entries, key=_sort_key))

        # per-mode tables: "valence" keeps ratings, "polarity" the pole of the label
        self._exact: dict[str, dict] = {}
        self._stems: dict[str, dict] = {}
        for mode in ("valence", "polarity"):
            exact: dict = defaultdict(lambda: defaultdict(list))
            stems: dict = defaultdict(lambda: defaultdict(list))
            for e in self.entries:
                if e.trait is None or e.is_multiword:
                    continue
                table = stems if e.wildcard else exact
                value = e.score if mode == "valence" else POLE_SCORE[e.polarity]
                table[e.lemma][e.trait].append(value)
            self._exact[mode] = {w: {t: sum(v) / len(v) for t, v in d.items()} for w, d in exact.items()}
            self._stems[mode] = {w: {t: sum(v) / len(v) for t, v in d.items()} for w, d in stems.items()}
        self._max_stem = max((len(s) for s in self._stems["valence"]), default=0)
        self._cache: dict[tuple[str, str], dict[Trait, float]] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __repr__(self) -> str:
        return f"Lexicon({self.name!r}, {len(self)} entries)"

    def entries_for(self, trait: Trait, polarity: Optional[Polarity] = None) -> list[LexiconEntry]:
        return [
            e for e in self.entries
            if e.trait is trait and (polarity is None or e.polarity is polarity)
        ]

    def traits(self) -> list[Trait]:
        return [t for t in MORAL_TRAITS if any(e.trait is t for e in self.entries)]

    def counts(self) -> dict[Trait, dict[Polarity, int]]:
        out = {t: {p: 0 for p in Polarity} for t in MORAL_TRAITS}
        for e in self.entries:
            if e.trait is not None:
                out[e.trait][e.polarity] += 1
        return out

    def lookup(self, token: str, by: str = "valence") -> dict[Trait, float]:
        """Per-trait score of ``token``; empty when the token is not in the lexicon.

        With ``by="polarity"`` the score is the pole of the polarity label
        (9 for virtue, 1 for vice) instead of the rating.
        """
        hit = self._cache.get((token, by))
        if hit is not None:
            return hit
        stems = self._stems[by]
        result: dict[Trait, float] = {}
        # shorter stems first, so longer (more specific) stems overwrite
        for n in range(1, min(len(token), self._max_stem) + 1):
            scores = stems.get(token[:n])
            if scores:
                result.update(scores)
        result.update(self._exact[by].get(token, {}))
        self._cache[(token, by)] = result
        return result


def _sort_key(e: LexiconEntry):
    trait_idx = MORAL_TRAITS.index(e.trait) if e.trait is not None else len(MORAL_TRAITS)
    return (trait_idx, e.lemma, e.pos, e.polarity.value)


@dataclass(frozen=True, order=True)
class StemPattern:
    text: str
    is_wildcard: bool = False

    def __post_init__(self):
        if not self.text:
            raise ValueError("empty stem pattern")
        if self.is_wildcard and len(self.text) < 2:
            raise ValueError(f"wildcard stem {self.text!r}* is too short")

    @classmethod
    def parse(cls, source: str) -> "StemPattern":
        source = source.strip().lower()
        if source.endswith("*"):
            return cls(source[:-1], True)
        return cls(source, False)

    def matches(self, lemma: str) -> bool:
        if self.is_wildcard:
            return lemma.startswith(self.text)
        return lemma == self.text

    def __str__(self) -> str:
        return self.text + ("*" if self.is_wildcard else "")


def expand_stems(
    patterns: Iterable[StemPattern], inventory: Iterable[tuple[str, str]]
) -> list[tuple[StemPattern, tuple[str, str]]]:
    """Match MFD stems against a lemma inventory.

    A wildcard stem matches every lemma that starts with it, so unrelated
    words (``caste*`` -> ``caster``) are kept; the candidates are meant for
    manual review. Output is sorted by (pattern, lemma, pos).
    """
    inventory = sorted(set(inventory))
    lemmas = [lemma for lemma, _ in inventory]
    out = []
    for pat in sorted(set(patterns)):
        if pat.is_wildcard:
            # inventory is sorted, so prefix matches form one contiguous run
            lo = _bisect(lemmas, pat.text)
            hi = lo
            while hi < len(lemmas) and lemmas[hi].startswith(pat.text):
                hi += 1
            out.extend((pat, inventory[i]) for i in range(lo, hi))
        else:
            i = _bisect(lemmas, pat.text)
            while i < len(lemmas) and lemmas[i] == pat.text:
                out.append((pat, inventory[i]))
                i += 1
    return out


def _bisect(seq: list[str], key: str) -> int:
    return bisect.bisect_left(seq, key)


# -- file formats -----------------------------------------------------------

MORALSTRENGTH_HEADER = ["lemma", "pos", "trait", "polarity", "moral_valence", "valence", "arousal"]
MFD_HEADER = ["pattern", "trait", "polarity"]


def _opt_float(text: str) -> Optional[float]:
    text = text.strip()
    return float(text) if text else None


def _read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def load_lexicon(path, format: str = "moralstrength", name: Optional[str] = None) -> Lexicon:
    """Read a lexicon file in ``moralstrength`` or ``mfd`` TSV format."""
    path = Path(path)
    if format not in ("moralstrength", "mfd"):
        raise ValueError(f"unknown lexicon format {format!r}")
    header = MORALSTRENGTH_HEADER if format == "moralstrength" else MFD_HEADER
    entries = []
    seen: dict[tuple, int] = {}
    rows = _read_rows(path)
    first = next(rows, None)
    if first is None:
        return Lexicon([], name=name or path.stem)
    lineno, cols = first
    if [c.strip().lower() for c in cols] != header:
        raise LexiconParseError(path, lineno, f"expected header {' '.join(header)}")

    for lineno, cols in rows:
        try:
            if format == "moralstrength":
                entry = _parse_moralstrength_row(cols)
            else:
                entry = _parse_mfd_row(cols)
        except LexiconValidationError as exc:
            raise LexiconValidationError(f"{path}:{lineno}: {exc}") from None
        except (ValueError, IndexError) as exc:
            raise LexiconParseError(path, lineno, str(exc)) from None
        if entry.key in seen:
            raise LexiconValidationError(
                f"{path}:{lineno}: duplicate entry {entry.lemma}#{entry.pos} for "
                f"{entry.trait.value if entry.trait else 'general'} (first at line {seen[entry.key]})"
            )
        seen[entry.key] = lineno
        entries.append(entry)
    return Lexicon(entries, name=name or path.stem)


def _parse_moralstrength_row(cols: list[str]) -> LexiconEntry:
    if len(cols) < 5 or len(cols) > 7:
        raise ValueError(f"expected 5-7 columns, got {len(cols)}")
    cols = cols + [""] * (7 - len(cols))
    lemma, pos, trait, polarity, mv, val, aro = (c.strip() for c in cols)
    polarity = Polarity.parse(polarity)
    if polarity is Polarity.GENERAL:
        raise LexiconValidationError("general polarity is only valid in MFD lexica")
    if not mv:
        raise ValueError("missing moral_valence")
    return LexiconEntry(
        lemma=lemma.lower(),
        pos=pos.lower() or "unknown",
        trait=Trait.parse(trait),
        polarity=polarity,
        moral_valence=float(mv),
        valence=_opt_float(val),
        arousal=_opt_float(aro),
    )


def _parse_mfd_row(cols: list[str]) -> LexiconEntry:
    if len(cols) != 3:
        raise ValueError(f"expected 3 columns, got {len(cols)}")
    pattern, trait, polarity = (c.strip() for c in cols)
    pat = StemPattern.parse(pattern)
    polarity = Polarity.parse(polarity)
    if polarity is Polarity.GENERAL and trait.lower() in ("", "general"):
        trait_value = None
    else:
        trait_value = Trait.parse(trait)
    return LexiconEntry(
        lemma=pat.text, pos="unknown", trait=trait_value, polarity=polarity, wildcard=pat.is_wildcard
    )


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def save_lexicon(lex: Lexicon, path, format: str = "moralstrength") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if format == "moralstrength":
            fh.write("\t".join(MORALSTRENGTH_HEADER) + "\n")
            for e in lex.entries:
                if e.trait is None or e.moral_valence is None:
                    raise LexiconValidationError(f"{e.lemma!r} cannot be written as MoralStrength")
                fh.write("\t".join([
                    e.lemma, e.pos, e.trait.value, e.polarity.value,
                    _fmt(e.moral_valence), _fmt(e.valence), _fmt(e.arousal),
                ]) + "\n")
        elif format == "mfd":
            fh.write("\t".join(MFD_HEADER) + "\n")
            for e in lex.entries:
                pattern = e.lemma + ("*" if e.wildcard else "")
                trait = e.trait.value if e.trait else "general"
                fh.write(f"{pattern}\t{trait}\t{e.polarity.value}\n")
        else:
            raise ValueError(f"unknown lexicon format {format!r}")


def load_inventory(path) -> list[tuple[str, str]]:
    """Read a ``lemma#pos`` per line inventory (e.g. dumped from WordNet)."""
    out = []
    for lineno, cols in _read_rows(path):
        line = cols[0].strip()
        lemma, sep, pos = line.rpartition("#")
        if not sep or not lemma:
            raise LexiconParseError(path, lineno, f"expected lemma#pos, got {line!r}")
        out.append((lemma.lower(), pos.lower()))
    return out


def load_release(directory, name: str = "moralstrength-release") -> Lexicon:
    """Read the published per-trait ``<trait>.tsv`` files (``LEMMA<TAB>EXPRESSED_MORAL``).

    The release has no part of speech or polarity columns: pos becomes
    ``unknown`` and polarity is derived from the score (>= 5 is virtue).
    Repeated lemmas within a trait file are averaged, with a warning.
    """
    directory = Path(directory)
    entries = []
    for trait in MORAL_TRAITS:
        path = directory / f"{trait.value}.tsv"
        if not path.exists():
            continue
        scores: dict[str, list[float]] = defaultdict(list)
        rows = _read_rows(path)
        next(rows, None)  # header
        for lineno, cols in rows:
            try:
                scores[cols[0].strip().lower()].append(float(cols[1]))
            except (ValueError, IndexError):
                raise LexiconParseError(path, lineno, "expected LEMMA<TAB>score") from None
        repeated = sorted(w for w, v in scores.items() if len(v) > 1)
        if repeated:
            warnings.warn(f"{path.name}: averaged repeated lemmas {', '.join(repeated)}", stacklevel=2)
        for lemma, vals in scores.items():
            mv = sum(vals) / len(vals)
            pol = Polarity.VIRTUE if mv >= NEUTRAL else Polarity.VICE
            entries.append(LexiconEntry(lemma, "unknown", trait, pol, moral_valence=mv))
    return Lexicon(entries, name=name)


@dataclass
class CountComparison:
    """Per-trait (virtue, vice) counts of a lexicon next to reference counts."""

    observed: dict[Trait, tuple[int, int]]
    expected: dict[Trait, tuple[int, int]]

    @property
    def matches(self) -> bool:
        return self.observed == self.expected

    def differences(self) -> list[str]:
        out = []
        for trait, (ev, ec) in self.expected.items():
            ov, oc = self.observed.get(trait, (0, 0))
            if (ov, oc) != (ev, ec):
                out.append(f"{trait.value}: virtue {ov} vs {ev}, vice {oc} vs {ec}")
        return out

    def to_text(self) -> str:
        lines = [f"{'trait':<10} {'virtue':>7} {'ref':>5} {'vice':>6} {'ref':>5}"]
        tv = te = cv = ce = 0
        for trait, (ev, ec) in self.expected.items():
            ov, oc = self.observed.get(trait, (0, 0))
            lines.append(f"{trait.value:<10} {ov:>7} {ev:>5} {oc:>6} {ec:>5}")
            tv, te, cv, ce = tv + ov, te + ev, cv + oc, ce + ec
        lines.append(f"{'total':<10} {tv:>7} {te:>5} {cv:>6} {ce:>5}")
        return "\n".join(lines)


def compare_counts(lex: Lexicon, expected: dict[Trait, tuple[int, int]] = PUBLISHED_COUNTS) -> CountComparison:
    counts = lex.counts()
    observed = {t: (counts[t][Polarity.VIRTUE], counts[t][Polarity.VICE]) for t in expected}
    return CountComparison(observed=observed, expected=dict(expected))
