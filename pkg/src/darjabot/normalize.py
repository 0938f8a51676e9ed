"""Dual-script text normalization for Darja utterances.

One pipeline handles both writing systems: Arabic-script text gets grapheme
unification (Alef variants, Alef Maqsura, Ta Marbuta) plus tatweel/diacritic
removal, Latin-script Arabizi gets lowercasing, apostrophe unification and
digit de-substitution (7->h, 3->a, 9->q). Structural cleaning (repeat
squashing, phone masking, whitespace collapsing) applies to both.

Every public function is pure; normalize() is idempotent on its own output.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum

MASK_TOKEN = "[PHONE]"

# Alef variants folded to plain Alef: madda, hamza above, hamza below, wasla.
_ALEF_VARIANTS = ("آ", "أ", "إ", "ٱ")

_ARABIC_FOLD = {ord(c): "ا" for c in _ALEF_VARIANTS}
_ARABIC_FOLD[0x0649] = "ي"  # Alef Maqsura -> Ya (any position)
_ARABIC_FOLD[0x0629] = "ه"  # Ta Marbuta -> Ha
_ARABIC_FOLD[0x0640] = None      # tatweel (kashida)
# Harakat U+064B..U+0652 plus the combining madda/hamza marks U+0653..U+0655.
# Dropping the combining forms keeps NFC from re-assembling a folded Alef
# variant out of "plain Alef + mark", which would break idempotence.
for _cp in range(0x064B, 0x0656):
    _ARABIC_FOLD[_cp] = None

#: Codepoints guaranteed absent from normalized output.
EXCLUDED_CODEPOINTS = frozenset(
    [0x0622, 0x0623, 0x0625, 0x0671, 0x0640, *range(0x064B, 0x0656)]
)

_APOSTROPHE_FOLD = {0x2019: "'", 0x02BC: "'", 0x0060: "'"}

_DIGIT_SUBS = {"7": "h", "3": "a", "9": "q"}

# Digits and phone separators are exempt from squashing: repeated digits are
# data (prices, USSD codes), not emphasis.
_SQUASH_RE = re.compile(r"([^0-9٠-٩۰-۹ .\-])\1{2,}", re.DOTALL)

# Algerian mobile number: 0 then 5/6/7 then eight digits, single space, dot
# or hyphen allowed between digits; never part of a longer digit run.
_PHONE_RE = re.compile(r"(?<!\d)0[ .\-]?[567](?:[ .\-]?\d){8}(?!\d)")

_WS_RE = re.compile(r"\s+")

_MAX_ROUNDS = 16


class Script(Enum):
    ARABIC = "arabic"
    LATIN = "latin"

    @classmethod
    def from_tag(cls, tag: str) -> "Script":
        try:
            return cls(tag.strip().lower())
        except ValueError:
            raise ValueError(f"unknown script tag {tag!r}; expected 'arabic' or 'latin'") from None


@dataclass(frozen=True)
class RawUtterance:
    text: str
    source_tag: str | None = None


@dataclass(frozen=True)
class MaskRecord:
    """One privacy replacement: ``span`` indexes the text mask_phone received."""

    span: tuple[int, int]
    token: str
    original: str


@dataclass(frozen=True)
class NormalizedUtterance:
    text: str
    script: Script
    masks: tuple[MaskRecord, ...] = field(default_factory=tuple)


def detect_script(text: str) -> Script:
    """Classify text as Arabic or Latin by letter majority.

    Arabic wins only on a strict majority of Arabic-block codepoints over
    ASCII letters; ties (including letter-free text) go to Latin, since
    Arabizi utterances often embed isolated Arabic tokens.
    """
    arabic = latin = 0
    for ch in text:
        cp = ord(ch)
        if 0x0600 <= cp <= 0x06FF:
            arabic += 1
        elif ("a" <= ch <= "z") or ("A" <= ch <= "Z"):
            latin += 1
    return Script.ARABIC if arabic > latin else Script.LATIN


def normalize_arabic(text: str) -> str:
    """Fold Arabic graphemes: Alef variants -> Alef, Alef Maqsura -> Ya,
    Ta Marbuta -> Ha; strip tatweel and diacritics."""
    return text.translate(_ARABIC_FOLD)


def _desub_pass(text: str) -> str:
    out = list(text)
    for i, ch in enumerate(text):
        if ch in _DIGIT_SUBS:
            left = text[i - 1] if i > 0 else ""
            right = text[i + 1] if i + 1 < len(text) else ""
            if left.isalpha() or right.isalpha():
                out[i] = _DIGIT_SUBS[ch]
    return "".join(out)


def _latin_segment(segment: str) -> str:
    segment = segment.lower().translate(_APOSTROPHE_FOLD)
    # Iterate: substituting one digit can make its neighbour letter-adjacent.
    while True:
        desubbed = _desub_pass(segment)
        if desubbed == segment:
            return segment
        segment = desubbed


def normalize_latin(text: str) -> str:
    """Lowercase, unify apostrophes, and de-substitute Arabizi digits.

    7/3/9 map to h/a/q only when touching a letter, so prices, dates and
    USSD codes survive. Mask tokens pass through verbatim.
    """
    parts = text.split(MASK_TOKEN)
    return MASK_TOKEN.join(_latin_segment(p) for p in parts)


def squash_repeats(text: str) -> str:
    """Collapse emphasis runs of 3+ identical characters to one occurrence.

    Doubles are kept (French loanwords need them); digit and phone-separator
    runs are left alone because repetition there is meaningful.
    """
    return _SQUASH_RE.sub(r"\1", text)


def mask_phone(text: str) -> tuple[str, list[MaskRecord]]:
    """Replace Algerian mobile numbers with the privacy token."""
    masks: list[MaskRecord] = []
    out: list[str] = []
    last = 0
    for m in _PHONE_RE.finditer(text):
        out.append(text[last : m.start()])
        out.append(MASK_TOKEN)
        masks.append(MaskRecord((m.start(), m.end()), MASK_TOKEN, m.group(0)))
        last = m.end()
    out.append(text[last:])
    return "".join(out), masks


def _normalize_once(text: str) -> tuple[str, list[MaskRecord], Script]:
    t = unicodedata.normalize("NFC", text)
    # Grapheme folding runs before masking so stray tatweel/diacritics inside
    # a digit sequence cannot hide a phone number; the second NFC re-composes
    # pairs the mark deletion may have exposed.
    t = normalize_arabic(t)
    t = unicodedata.normalize("NFC", t)
    t = _WS_RE.sub(" ", t)
    t, masks = mask_phone(t)
    t = squash_repeats(t)
    script = detect_script(t)
    if script is Script.LATIN:
        t = normalize_latin(t)
    t = _WS_RE.sub(" ", t).strip()
    return t, masks, script


def normalize(raw: RawUtterance | str) -> NormalizedUtterance:
    """Run the full cleaning pipeline; the result is a fixed point.

    Order: NFC, grapheme folding, whitespace unification, phone masking,
    repeat squashing, script detection, Latin-specific cleaning, trim.
    The pipeline re-runs until stable so that e.g. a phone number only
    revealed by de-substitution still gets masked.
    """
    text = raw.text if isinstance(raw, RawUtterance) else raw
    masks: list[MaskRecord] = []
    for _ in range(_MAX_ROUNDS):
        new_text, round_masks, script = _normalize_once(text)
        masks.extend(round_masks)
        if new_text == text and not round_masks:
            return NormalizedUtterance(new_text, script, tuple(masks))
        text = new_text
    raise RuntimeError("normalization did not reach a fixed point")
