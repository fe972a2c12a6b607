"""Inverted index over definitions of plan operators and SQL keywords.

Documents come from a tab-separated corpus file. Tokens are lowercased,
stop words dropped, and lemmatized by a small irregular table plus a
trailing-s rule; the token inventory (operator names) is small and closed,
so nothing heavier is needed.

Ranking is tf-idf with tokens found in a document's term weighted double
against tokens found only in its body.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .config import data_path
from .errors import DuplicateDocId, EmptyCorpus

# Standard English stop list; "only" is deliberately not in it because
# "index only scan" must keep all three words.
STOP_WORDS = frozenset(
    """
    i me my myself we our ours ourselves you your yours yourself yourselves
    he him his himself she her hers herself it its itself they them their
    theirs themselves what which who whom this that these those am is are
    was were be been being have has had having do does did doing a an the
    and but if or because as until while of at by for with about against
    between into through during before after above below to from up down
    in out on off over under again further then once here there when where
    why how all any both each few more most other some such no nor not own
    same so than too very s t can will just don should now d ll m o re ve
    y ain aren couldn didn doesn hadn hasn haven isn ma mightn mustn needn
    shan shouldn wasn weren won wouldn
    """.split()
)

# Irregular plurals and -es forms the trailing-s rule would mangle.
LEMMA_TABLE = {
    "indices": "index",
    "indexes": "index",
    "children": "child",
    "queries": "query",
    "matches": "match",
    "hashes": "hash",
    "branches": "branch",
    "analyses": "analysis",
    "passes": "pass",
    "processes": "process",
    "classes": "class",
    "batches": "batch",
    "searches": "search",
    "caches": "cache",
    "subqueries": "subquery",
    "entries": "entry",
    "strategies": "strategy",
    "copies": "copy",
}

# Words ending in a real "s" that is not a plural marker.
NO_STRIP = frozenset(
    {
        "alias",
        "always",
        "does",
        "exists",
        "is",
        "its",
        "less",
        "perhaps",
        "plus",
        "status",
        "this",
        "thus",
        "versus",
        "whereas",
    }
)

_WORD_RE = re.compile(r"[a-z0-9]+")


def split_words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def lemmatize(word: str) -> str:
    """Reduce an already-lowercased word to its lemma."""
    if word in LEMMA_TABLE:
        return LEMMA_TABLE[word]
    if (
        len(word) >= 4
        and word.endswith("s")
        and not word.endswith("ss")
        and word not in NO_STRIP
    ):
        return word[:-1]
    return word


def normalize_token(word: str) -> Optional[str]:
    """Lowercase, drop stop words, lemmatize. None means: drop the word."""
    word = word.lower()
    if word in STOP_WORDS:
        return None
    return lemmatize(word)


def normalize_text(text: str) -> list[str]:
    tokens = []
    for word in split_words(text):
        norm = normalize_token(word)
        if norm is not None:
            tokens.append(norm)
    return tokens


@dataclass
class DefinitionDoc:
    doc_id: int
    term: str
    aliases: list[str]
    body: str
    source: str


class Field(Enum):
    TERM = "term"
    BODY = "body"


@dataclass
class InvertedIndex:
    # token -> [(doc_id, term_frequency, field)]
    postings: dict[str, list[tuple[int, int, Field]]] = field(default_factory=dict)
    doc_count: int = 0
    doc_freq: dict[str, int] = field(default_factory=dict)
    docs: dict[int, DefinitionDoc] = field(default_factory=dict)


def build_index(corpus: list[DefinitionDoc]) -> InvertedIndex:
    if not corpus:
        raise EmptyCorpus("cannot index an empty corpus")
    index = InvertedIndex(doc_count=len(corpus))
    for doc in corpus:
        if doc.doc_id in index.docs:
            raise DuplicateDocId(f"doc_id {doc.doc_id} appears twice")
        index.docs[doc.doc_id] = doc

        term_text = " ".join([doc.term, *doc.aliases])
        for text, where in ((term_text, Field.TERM), (doc.body, Field.BODY)):
            counts: dict[str, int] = {}
            for token in normalize_text(text):
                counts[token] = counts.get(token, 0) + 1
            for token, tf in counts.items():
                index.postings.setdefault(token, []).append((doc.doc_id, tf, where))

    for token, postings in index.postings.items():
        index.doc_freq[token] = len({doc_id for doc_id, _, _ in postings})
    return index


def search(index: InvertedIndex, keywords: list[str]) -> list[tuple[int, float]]:
    """Rank documents for normalized keywords; best first, empty when no hit.

    score(d) = sum over query tokens t of idf(t) * (2*tf_term + tf_body),
    idf(t) = ln(1 + doc_count / doc_freq[t]). Ties break on lower doc_id.
    """
    scores: dict[int, float] = {}
    for token in keywords:
        postings = index.postings.get(token)
        if not postings:
            continue
        idf = math.log(1 + index.doc_count / index.doc_freq[token])
        for doc_id, tf, where in postings:
            weight = 2 * tf if where is Field.TERM else tf
            scores[doc_id] = scores.get(doc_id, 0.0) + idf * weight
    ranked = [(doc_id, score) for doc_id, score in scores.items() if score > 0]
    ranked.sort(key=lambda pair: (-pair[1], pair[0]))
    return ranked


def load_corpus(path: Path | None = None) -> list[DefinitionDoc]:
    """Read the tab-separated corpus: term, aliases (|-joined), body, source."""
    if path is None:
        path = data_path("definitions.tsv")
    corpus: list[DefinitionDoc] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise EmptyCorpus(
                f"corpus line needs 4 tab-separated fields, got {len(parts)}: {line[:60]!r}"
            )
        term, aliases, body, source = (part.strip() for part in parts)
        corpus.append(
            DefinitionDoc(
                doc_id=len(corpus),
                term=term,
                aliases=[a.strip() for a in aliases.split("|") if a.strip()],
                body=body,
                source=source,
            )
        )
    return corpus
