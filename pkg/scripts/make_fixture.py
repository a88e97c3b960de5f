#!/usr/bin/env python3
"""Regenerate the synthetic evaluation fixture under tests/data/.

The fixture is a 13-case dataset in the public MQUAKE JSON layout, spanning
2/3/4-hop chains and 1-4 edits per case, plus the two-sentence text-edit
file used by the end-to-end ingestion test. Everything is deterministic;
run this script only when the fixture design changes, then commit the
regenerated files.

Design constraints the cases must keep satisfying:

- Sub-question templates are shared per relation, so instantiating a
  decomposition with the previous hop's answer reproduces the stored hop
  question character for character.
- Case 1 carries an off-chain rewrite of (Brazil, continent) -> Asia that
  cases 2 and 6 later overwrite with Africa: the cross-case conflict that
  separates conflict-resolving ingestion from append-only ingestion.
- Unedited hops whose subject is another case's edit subject exist exactly
  once (case 3, hop 2: Frida Kahlo) so that a low threshold with a noisy
  scorer retrieves a wrong fact there and nowhere else.
- Original chains and unedited new-chain hops are mutually consistent, so
  a pre-edit oracle world never returns conflicting answers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"

# relation key -> (label, relation id, question template, cloze prompt)
RELATIONS = {
    "author": ("author", "P50", "Who is the author of {}?", "The author of {} is"),
    "citizenship": (
        "country of citizenship",
        "P27",
        "What is the country of citizenship of {}?",
        "The country of citizenship of {} is",
    ),
    "continent": (
        "continent",
        "P30",
        "Which continent is {} located in?",
        "{} is located in the continent of",
    ),
    "spouse": ("spouse", "P26", "Who is the spouse of {}?", "The spouse of {} is"),
    "head_of_state": (
        "head of state",
        "P35",
        "Who is the head of state of {}?",
        "The head of state of {} is",
    ),
    "creator": ("creator", "P170", "Who is the creator of {}?", "The creator of {} is"),
    "origin": (
        "country of origin",
        "P495",
        "Which country was {} created in?",
        "{} was created in the country of",
    ),
    "founded": ("founded by", "P112", "Who founded {}?", "{} was founded by"),
    "capital": ("capital", "P36", "What is the capital of {}?", "The capital of {} is"),
    "employer": (
        "employer",
        "P108",
        "Who is the employer of {}?",
        "The employer of {} is",
    ),
    "country": (
        "country",
        "P17",
        "Which country is {} located in?",
        "{} is located in the country of",
    ),
    "official_language": (
        "official language",
        "P37",
        "What is the official language of {}?",
        "The official language of {} is",
    ),
    "sport": (
        "sport",
        "P641",
        "Which sport is {} associated with?",
        "{} is associated with the sport of",
    ),
    "headquarters": (
        "headquarters location",
        "P159",
        "Where is the headquarters of {}?",
        "The headquarters of {} is located in",
    ),
}


@dataclass
class Hop:
    """One chain link: original-world and new-world answers for a relation."""

    rel: str
    orig: str
    new: str
    edited: bool = False
    rewrite_old: str = ""  # target_true of the rewrite, when edited
    rewrite_subject: str = ""  # override when the edit surface differs
    orig_aliases: tuple[str, ...] = ()
    new_aliases: tuple[str, ...] = ()


@dataclass
class Case:
    case_id: int
    subject: str
    questions: list[str]
    hops: list[Hop]
    # off-chain rewrites: (relation key, subject, old object, new object)
    extra_rewrites: list[tuple[str, str, str, str]] = field(default_factory=list)
    answer: str = ""
    answer_aliases: tuple[str, ...] = ()
    new_answer: str = ""
    new_answer_aliases: tuple[str, ...] = ()


CASES = [
    Case(
        case_id=1,
        subject="Carmen",
        questions=[
            "What is the country of citizenship of the author of Carmen?",
            "In which country does the author of Carmen hold citizenship?",
            "The author of Carmen is a citizen of which country?",
        ],
        hops=[
            Hop("author", "Prosper Mérimée", "Haruki Murakami", True, "Prosper Mérimée"),
            Hop("citizenship", "France", "Japan"),
        ],
        extra_rewrites=[("continent", "Brazil", "South America", "Asia")],
    ),
    Case(
        case_id=2,
        subject="Pelé",
        questions=[
            "Which continent is the country of citizenship of Pelé located in?",
            "On which continent is the country of citizenship of Pelé?",
            "Pelé is a citizen of a country on which continent?",
        ],
        hops=[
            Hop("citizenship", "Brazil", "Brazil"),
            Hop(
                "continent",
                "South America",
                "Africa",
                True,
                "South America",
                new_aliases=("African continent",),
            ),
        ],
    ),
    Case(
        case_id=3,
        subject="The Old Guitarist",
        questions=[
            "What is the country of citizenship of the creator of The Old Guitarist?",
            "In which country does the creator of The Old Guitarist hold citizenship?",
            "The creator of The Old Guitarist is a citizen of which country?",
        ],
        hops=[
            Hop("creator", "Pablo Picasso", "Frida Kahlo", True, "Pablo Picasso"),
            Hop("citizenship", "Spain", "Mexico"),
        ],
    ),
    Case(
        case_id=4,
        subject="Frida Kahlo",
        questions=[
            "What is the country of citizenship of the spouse of Frida Kahlo?",
            "In which country does the spouse of Frida Kahlo hold citizenship?",
            "The spouse of Frida Kahlo is a citizen of which country?",
        ],
        hops=[
            Hop("spouse", "Diego Rivera", "Vincent van Gogh", True, "Diego Rivera"),
            Hop("citizenship", "Mexico", "Netherlands"),
        ],
    ),
    Case(
        case_id=5,
        subject="Canada",
        questions=[
            "What is the country of citizenship of the head of state of Canada?",
            "In which country does the head of state of Canada hold citizenship?",
            "The head of state of Canada is a citizen of which country?",
        ],
        hops=[
            Hop("head_of_state", "Charles III", "Emmanuel Macron", True, "Charles III"),
            Hop("citizenship", "United Kingdom", "Italy", True, "France"),
        ],
        answer_aliases=("UK",),
    ),
    Case(
        case_id=6,
        subject="Watford F.C.",
        questions=[
            "Which continent is the country of origin of the sport associated with Watford F.C. located in?",
            "On which continent was the sport associated with Watford F.C. created?",
            "The sport associated with Watford F.C. originated on which continent?",
        ],
        hops=[
            Hop(
                "sport",
                "Association Football (Soccer)",
                "Association Football (Soccer)",
                orig_aliases=("Soccer",),
                new_aliases=("Soccer",),
            ),
            Hop(
                "origin",
                "England",
                "Brazil",
                True,
                "England",
                rewrite_subject="Association football",
            ),
            Hop("continent", "Europe", "Africa", True, "South America"),
        ],
    ),
    Case(
        case_id=7,
        subject="Inception",
        questions=[
            "What is the capital of the country of citizenship of the creator of Inception?",
            "What city is the capital of the country where the creator of Inception holds citizenship?",
            "The creator of Inception is a citizen of a country whose capital is what?",
        ],
        hops=[
            Hop("creator", "Christopher Nolan", "Christopher Nolan"),
            Hop("citizenship", "United Kingdom", "Iceland", True, "United Kingdom"),
            Hop("capital", "London", "Reykjavik"),
        ],
    ),
    Case(
        case_id=8,
        subject="The Shining",
        questions=[
            "What is the country of citizenship of the spouse of the author of The Shining?",
            "In which country does the spouse of the author of The Shining hold citizenship?",
            "The spouse of the author of The Shining is a citizen of which country?",
        ],
        hops=[
            Hop("author", "Stephen King", "Agatha Christie", True, "Stephen King"),
            Hop("spouse", "Tabitha King", "Pablo Neruda", True, "Archibald Christie"),
            Hop(
                "citizenship",
                "United States of America",
                "Portugal",
                True,
                "Chile",
            ),
        ],
        answer_aliases=("USA", "United States"),
    ),
    Case(
        case_id=9,
        subject="Amazon",
        questions=[
            "What is the capital of the country of citizenship of the founder of Amazon?",
            "What city is the capital of the country where the founder of Amazon holds citizenship?",
            "The founder of Amazon is a citizen of a country whose capital is what?",
        ],
        hops=[
            Hop("founded", "Jeff Bezos", "Elon Musk", True, "Jeff Bezos"),
            Hop("citizenship", "United States of America", "South Africa"),
            Hop("capital", "Washington, D.C.", "Nairobi", True, "Pretoria"),
        ],
        answer_aliases=("Washington DC",),
    ),
    Case(
        case_id=10,
        subject="Hamlet",
        questions=[
            "What is the official language of the country of citizenship of the spouse of the author of Hamlet?",
            "Which language is official in the country where the spouse of the author of Hamlet holds citizenship?",
            "The spouse of the author of Hamlet is a citizen of a country whose official language is what?",
        ],
        hops=[
            Hop("author", "William Shakespeare", "William Shakespeare"),
            Hop("spouse", "Anne Hathaway", "Anne Hathaway"),
            Hop("citizenship", "England", "Kenya", True, "England"),
            Hop("official_language", "English", "Swahili"),
        ],
    ),
    Case(
        case_id=11,
        subject="Mona Lisa",
        questions=[
            "What is the country of citizenship of the head of state of the country of citizenship of the creator of Mona Lisa?",
            "In which country does the head of state of the country of citizenship of the creator of Mona Lisa hold citizenship?",
            "The head of state of the country of the creator of Mona Lisa is a citizen of which country?",
        ],
        hops=[
            Hop("creator", "Leonardo da Vinci", "Yoko Ono", True, "Leonardo da Vinci"),
            Hop("citizenship", "Italy", "Norway", True, "Japan"),
            Hop("head_of_state", "Sergio Mattarella", "Angela Merkel", True, "Harald V"),
            Hop("citizenship", "Italy", "Spain", True, "Germany"),
        ],
    ),
    Case(
        case_id=12,
        subject="Python",
        questions=[
            "Which country is the headquarters of the employer of the creator of Python located in?",
            "In which country is the headquarters of the employer of the creator of Python?",
            "The employer of the creator of Python has its headquarters in which country?",
        ],
        hops=[
            Hop("creator", "Guido van Rossum", "Guido van Rossum"),
            Hop("employer", "Dropbox", "Nintendo", True, "Dropbox"),
            Hop("headquarters", "San Francisco", "Kyoto"),
            Hop("country", "United States of America", "Egypt", True, "Japan"),
        ],
        answer_aliases=("USA",),
    ),
    Case(
        case_id=13,
        subject="Neuromancer",
        questions=[
            "Who is the spouse of the head of state of the country of citizenship of the author of Neuromancer?",
            "To whom is the head of state of the country of citizenship of the author of Neuromancer married?",
            "The head of state of the country of citizenship of the author of Neuromancer is married to whom?",
        ],
        hops=[
            Hop("author", "William Gibson", "Ursula K. Le Guin", True, "William Gibson"),
            Hop(
                "citizenship",
                "Canada",
                "Peru",
                True,
                "United States of America",
            ),
            Hop(
                "head_of_state",
                "Charles III",
                "Justin Trudeau",
                True,
                "Dina Boluarte",
            ),
            Hop(
                "spouse",
                "Queen Camilla",
                "Sophie Trudeau",
                new_aliases=("Sophie Grégoire Trudeau",),
            ),
        ],
        new_answer="Sophie Grégoire Trudeau",
        new_answer_aliases=("Sophie Trudeau",),
    ),
]


def collect_qids(cases: list[Case]) -> dict[str, str]:
    names = set()
    for case in cases:
        for hop in case.hops:
            if hop.edited:
                names.add(hop.rewrite_old)
                names.add(hop.new)
        for _, _, old, new in case.extra_rewrites:
            names.add(old)
            names.add(new)
    return {name: f"Q{750001 + i}" for i, name in enumerate(sorted(names))}


def hop_json(rel_key: str, subject: str, answer: str, aliases: tuple[str, ...]) -> dict:
    _, _, template, prompt = RELATIONS[rel_key]
    return {
        "question": template.format(subject),
        "cloze": prompt.format(subject),
        "answer": answer,
        "answer_alias": list(aliases),
    }


def rewrite_json(
    rel_key: str, subject: str, old: str, new: str, qids: dict[str, str]
) -> dict:
    _, pid, template, prompt = RELATIONS[rel_key]
    return {
        "prompt": prompt,
        "relation_id": pid,
        "subject": subject,
        "target_true": {"str": old, "id": qids[old]},
        "target_new": {"str": new, "id": qids[new]},
        "question": template.format(subject),
    }


def build_case(case: Case, qids: dict[str, str]) -> dict:
    orig_subjects = [case.subject]
    new_subjects = [case.subject]
    for hop in case.hops[:-1]:
        orig_subjects.append(hop.orig)
        new_subjects.append(hop.new)
    rewrites = []
    for i, hop in enumerate(case.hops):
        if hop.edited:
            subject = hop.rewrite_subject or new_subjects[i]
            rewrites.append(rewrite_json(hop.rel, subject, hop.rewrite_old, hop.new, qids))
    for rel_key, subject, old, new in case.extra_rewrites:
        rewrites.append(rewrite_json(rel_key, subject, old, new, qids))
    last = case.hops[-1]
    return {
        "case_id": case.case_id,
        "questions": list(case.questions),
        "requested_rewrite": rewrites,
        "single_hops": [
            hop_json(h.rel, orig_subjects[i], h.orig, h.orig_aliases)
            for i, h in enumerate(case.hops)
        ],
        "new_single_hops": [
            hop_json(h.rel, new_subjects[i], h.new, h.new_aliases)
            for i, h in enumerate(case.hops)
        ],
        "answer": case.answer or last.orig,
        "answer_alias": list(case.answer_aliases or last.orig_aliases),
        "new_answer": case.new_answer or last.new,
        "new_answer_alias": list(case.new_answer_aliases or last.new_aliases),
    }


FOOTBALL_EDITS = [
    {"text": "Association football was created in the country of Brazil."},
    {"text": "Brazil is located in the continent of Africa."},
]


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    qids = collect_qids(CASES)
    payload = [build_case(case, qids) for case in CASES]
    out = DATA_DIR / "fixture_cf.json"
    out.write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(f"wrote {out} ({len(payload)} cases)")
    edits_out = DATA_DIR / "football_edits.jsonl"
    edits_out.write_text(
        "".join(json.dumps(e, ensure_ascii=False) + "\n" for e in FOOTBALL_EDITS),
        encoding="utf-8",
    )
    print(f"wrote {edits_out} ({len(FOOTBALL_EDITS)} statements)")


if __name__ == "__main__":
    main()
