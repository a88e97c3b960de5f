"""Shared string normalization.

One normalization convention is used across alias indexing, oracle lookup and
answer matching so the components agree on what "the same string" means:
case-fold, trim, collapse internal whitespace, strip one leading English
article and trailing punctuation. Lookup keys additionally drop parenthetical
suffixes ("Association Football (Soccer)" -> "association football").
"""

from __future__ import annotations

import re

_ARTICLES = ("the ", "a ", "an ")
_PAREN_RE = re.compile(r"\([^()]*\)")
_TRAILING_PUNCT = ".,;:!?\"'`"

# Function words ignored on the phrase side of relation scoring.
STOPWORDS = frozenset(
    {"a", "an", "the", "of", "in", "on", "at", "for", "to", "is", "was", "by", "with"}
)


def _collapse(s: str) -> str:
    return " ".join(s.split())


def _strip_article(s: str) -> str:
    for art in _ARTICLES:
        if s.startswith(art):
            return s[len(art):]
    return s


def normalize_alias(s: str) -> str:
    """Canonical key form for entity aliases.

    Case-fold, trim, collapse whitespace, strip a leading English article and
    trailing punctuation. Returns "" for strings with no content.
    """
    s = _strip_article(_collapse(s).casefold())
    return s.rstrip(_TRAILING_PUNCT + " ")


def normalize_answer(s: str) -> str:
    """Normalize an answer string for comparison.

    Same convention as aliases except only trailing periods are stripped, so
    "Africa." == "Africa" while a trailing "?" survives in question keys.
    """
    s = _strip_article(_collapse(s).casefold())
    return s.rstrip(". ")


def lookup_key(s: str) -> str:
    """Normalized key with parenthetical suffixes dropped, for table lookups."""
    return normalize_answer(_PAREN_RE.sub(" ", s))


def phrase_tokens(s: str) -> list[str]:
    """Content tokens of a relation label or paraphrase.

    Stopwords are removed unless that would empty the phrase.
    """
    toks = normalize_alias(s).split()
    kept = [t for t in toks if t not in STOPWORDS]
    return kept or toks
