"""Seeded synthetic Darja corpus for benchmarking the full pipeline.

Twenty telecom intents, sixty utterances each, rendered from small
template pools in both scripts and then roughed up with the noise the
real traffic shows: character repetition runs (3-6 long), Arabizi digit
substitutions (h->7, a->3, q->9), Alef-variant swaps, stray diacritics
and random casing. Normalization is expected to fold that noise back,
which is exactly what the benchmark measures.
"""

from __future__ import annotations

import random

from .corpus import Dataset, LabeledExample
from .normalize import RawUtterance

_CITIES = ["alger", "oran", "biskra", "annaba", "setif", "tlemcen"]
_NUMBERS = ["100", "200", "500", "1000", "2000"]
_OFFERS = ["pixx", "win", "sama"]

# intent -> (script, templates); {c}=city, {n}=number, {o}=offer
_LATIN_INTENTS: dict[str, list[str]] = {
    "balance_check": [
        "chhal bqali f solde",
        "nheb nchouf solde taai",
        "kayen chhal f compte mobile",
        "solde taai chhal rah",
        "wach rah solde dyali",
    ],
    "activate_roaming": [
        "nheb nactivi roaming",
        "kifash nkhedem roaming f {c}",
        "activiw li roaming svp",
        "rani msafer nheb roaming",
        "roaming kifash yetactiva",
    ],
    "recharge_credit": [
        "nheb naamar credit {n} da",
        "kifash ncharger flexy",
        "aamarli storm b {n}",
        "recharge credit svp",
        "win nkdar naamar carte",
    ],
    "puk_code": [
        "nsit code puk taai",
        "win nelqa ramz puk",
        "kifash nesterdjaa le code puk",
        "sim bloki nheb code puk",
        "aatini code puk svp",
    ],
    "internet_issue": [
        "internet ma yemchich",
        "connexion rahi mahbousa",
        "andi mochkil f internet",
        "debit dialna daif bezaf",
        "internet yetqataa f {c}",
    ],
    "bill_inquiry": [
        "chhal jat factoura hadi chahr",
        "nheb nchouf fattra taai",
        "facture dyali chhal rahi",
        "win nelqa detail factoura",
        "kifash nkhalles fattra",
    ],
    "sim_replacement": [
        "radit sim jdida kifash ndir",
        "la puce taai rahi mkassra",
        "nheb nbadel la puce",
        "sim dyali dayaatha",
        "badlouli sim f agence {c}",
    ],
    "transfer_credit": [
        "nheb nbaaat credit l shabi",
        "kifash ndir transfert flexy",
        "baaat {n} da l raqm akhor",
        "selekli credit l khouya",
        "transfert solde mumkin",
    ],
    "cancel_service": [
        "nheb nhabes service hada",
        "kifash nlghi abonnement",
        "habsouli option internet",
        "ma bghitch nkamel b service",
        "annulation dyal offre svp",
    ],
    "data_bundle": [
        "nheb forfait internet {n}",
        "kayen pack data rkhis",
        "aatini forfait gig kbir",
        "wach men forfait data andkom",
        "forfait internet chhar kamel",
    ],
    "call_rates": [
        "chhal tarif l appel",
        "prix dyal la minute chhal",
        "tarif telephone l {c}",
        "chhal yqass appel international",
        "aatini les tarifs des appels",
    ],
    "activate_numbers": [
        "kifash nactivi khidma star",
        "activili service taai",
        "nheb nkhedem option jdida",
        "wach ndir bach nactivi offre",
        "activation dyal option kifash",
    ],
    "agency_location": [
        "win kayna agence qriba",
        "andkom boutique f {c}",
        "win nelqa centre de service",
        "adresse dyal agence svp",
        "agence warini win rahi",
    ],
    "speak_agent": [
        "nheb nahder maa conseiller",
        "aatini moudir service client",
        "habit nkalem operateur",
        "conseiller client svp",
        "nheb nahki maa insan machi robot",
    ],
}

_ARABIC_INTENTS: dict[str, list[str]] = {
    "number_check": [
        "كيفاش نعرف رقمي",
        "واش هو رقم الهاتف تاعي",
        "نسيت رقمي عاونوني",
        "رقم البطاقه تاعي واش هو",
    ],
    "complaint": [
        "عندي شكوى على الخدمه",
        "راني مقلق من الشبكه",
        "نحب ندير ريكلام",
        "الخدمه ضعيفه بزاف",
    ],
    "network_coverage": [
        "واش كاينه تغطيه في الصحراء",
        "الشبكه ما تمشيش في الدار",
        "كاش تغطيه في الطريق",
        "وين كاينه التغطيه مليحه",
    ],
    "activate_fourg": [
        "كيفاش نفعل انترنت الجيل الرابع",
        "نحب نخدم الجيل الرابع",
        "فعلولي انترنت سريع",
        "الجيل الرابع ما يخدمش",
    ],
}

# knowledge-seeking intents: generic offer questions, answered by retrieval
_KNOWLEDGE_INTENTS: dict[str, list[str]] = {
    "offer_info": [
        "wach hiya offre {o} {n}",
        "aatini details dyal {o}",
        "chhal prix dyal {o} {n}",
        "wach yaati {o} f data",
        "maalomat ala offre {o}",
    ],
    "offer_compare": [
        "qaren bin {o} w win",
        "chnou khir {o} wela sama",
        "difference bin {o} {n} w {o} {n}",
        "wach ahsen offre lil internet",
        "comparaison dyal les offres",
    ],
}

KNOWLEDGE_INTENT_NAMES = tuple(sorted(_KNOWLEDGE_INTENTS))

_ALEF_VARIANTS = ["آ", "أ", "إ"]
_DIACRITICS = ["ً", "َ", "ّ", "ْ"]
_SUB_MAP = {"h": "7", "a": "3", "q": "9"}


def intent_names() -> list[str]:
    return sorted({**_LATIN_INTENTS, **_ARABIC_INTENTS, **_KNOWLEDGE_INTENTS})


def _fill(template: str, rng: random.Random) -> str:
    return (
        template.replace("{c}", rng.choice(_CITIES))
        .replace("{n}", rng.choice(_NUMBERS))
        .replace("{o}", rng.choice(_OFFERS))
    )


def _noise_repeat(text: str, rng: random.Random) -> str:
    positions = [i for i, ch in enumerate(text) if ch.isalpha()]
    if not positions:
        return text
    i = rng.choice(positions)
    return text[:i] + text[i] * rng.randint(3, 6) + text[i + 1 :]


def _noise_case(text: str, rng: random.Random) -> str:
    out = [ch.upper() if ch.isalpha() and rng.random() < 0.25 else ch for ch in text]
    return "".join(out)


def _noise_arabizi(text: str, rng: random.Random) -> str:
    words = text.split(" ")
    for wi, word in enumerate(words):
        if sum(ch.isalpha() for ch in word) < 2:
            continue  # keep at least one letter anchor per word
        chars = list(word)
        swapped = 0
        for ci, ch in enumerate(chars):
            if ch in _SUB_MAP and swapped < len(word) - 1 and rng.random() < 0.4:
                chars[ci] = _SUB_MAP[ch]
                swapped += 1
        if any(c.isalpha() for c in chars):
            words[wi] = "".join(chars)
    return " ".join(words)


def _noise_alef(text: str, rng: random.Random) -> str:
    return "".join(
        rng.choice(_ALEF_VARIANTS) if ch == "ا" and rng.random() < 0.5 else ch
        for ch in text
    )


def _noise_marks(text: str, rng: random.Random) -> str:
    out = []
    for ch in text:
        out.append(ch)
        if "ء" <= ch <= "ي" and rng.random() < 0.12:
            out.append(rng.choice(_DIACRITICS))
    return "".join(out)


def _roughen(text: str, arabic: bool, rng: random.Random) -> str:
    if arabic:
        if rng.random() < 0.7:
            text = _noise_alef(text, rng)
        if rng.random() < 0.4:
            text = _noise_marks(text, rng)
        if rng.random() < 0.35:
            text = _noise_repeat(text, rng)
    else:
        if rng.random() < 0.6:
            text = _noise_arabizi(text, rng)
        if rng.random() < 0.45:
            text = _noise_case(text, rng)
        if rng.random() < 0.35:
            text = _noise_repeat(text, rng)
    return text


def generate_corpus(seed: int = 42, per_intent: int = 60) -> Dataset:
    """Deterministic mixed-script corpus: same seed, same utterances."""
    rng = random.Random(seed)
    pools: dict[str, tuple[list[str], bool]] = {}
    for intent, templates in _LATIN_INTENTS.items():
        pools[intent] = (templates, False)
    for intent, templates in _ARABIC_INTENTS.items():
        pools[intent] = (templates, True)
    for intent, templates in _KNOWLEDGE_INTENTS.items():
        pools[intent] = (templates, False)
    examples: list[LabeledExample] = []
    for intent in sorted(pools):
        templates, arabic = pools[intent]
        for _ in range(per_intent):
            text = _fill(rng.choice(templates), rng)
            text = _roughen(text, arabic, rng)
            examples.append(LabeledExample(RawUtterance(text, source_tag="synthetic"), intent))
    return Dataset(tuple(examples), script=None)
