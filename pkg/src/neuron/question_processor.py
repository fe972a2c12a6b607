"""Classify plan questions, pull out step numbers, extract search keywords.

Five question categories are supported; a multinomial naive Bayes model
over bag-of-words features picks one. Classification keeps stop words
("how many", "what is" carry most of the category signal) while keyword
extraction for definition lookup drops them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .config import data_path
from .definition_index import lemmatize, normalize_token, split_words
from .errors import AmbiguousStepReference, EmptyClass, NoStepReference


class QuestionCategory(Enum):
    # declaration order doubles as the tie-break order in classify()
    DEFINITION = "definition"
    ROW_COUNT = "row_count"
    OPERATOR_LIST = "operator_list"
    STEP_TIME = "step_time"
    DOMINANT_OPERATOR = "dominant"


@dataclass
class TrainingSet:
    examples: list[tuple[str, QuestionCategory]] = field(default_factory=list)


@dataclass
class NBModel:
    classes: list[QuestionCategory]
    priors: dict[QuestionCategory, float]
    token_counts: dict[QuestionCategory, dict[str, int]]
    class_totals: dict[QuestionCategory, int]
    vocabulary: set[str]
    alpha: float


def class_tokens(question: str) -> list[str]:
    """Tokens for classification: lowercased and lemmatized, stops kept."""
    return [lemmatize(word) for word in split_words(question)]


def train_classifier(
    data: TrainingSet,
    alpha: float = 1.0,
    classes: Optional[list[QuestionCategory]] = None,
) -> NBModel:
    """Fit the naive Bayes model.

    By default every category must be represented; a reduced ``classes``
    list trains a restricted model (useful for experiments and tests).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if classes is None:
        classes = list(QuestionCategory)
    counts_by_class: dict[QuestionCategory, dict[str, int]] = {c: {} for c in classes}
    examples_by_class: dict[QuestionCategory, int] = {c: 0 for c in classes}
    vocabulary: set[str] = set()
    for question, category in data.examples:
        examples_by_class[category] += 1
        for token in class_tokens(question):
            counts = counts_by_class[category]
            counts[token] = counts.get(token, 0) + 1
            vocabulary.add(token)
    for category, count in examples_by_class.items():
        if count == 0:
            raise EmptyClass(f"no training examples for {category.value}")
    total = len(data.examples)
    return NBModel(
        classes=classes,
        priors={c: examples_by_class[c] / total for c in classes},
        token_counts=counts_by_class,
        class_totals={c: sum(counts_by_class[c].values()) for c in classes},
        vocabulary=vocabulary,
        alpha=alpha,
    )


def classify(
    model: NBModel, question: str
) -> tuple[QuestionCategory, dict[QuestionCategory, float]]:
    """Most likely category plus the per-class log posteriors.

    Out-of-vocabulary tokens are skipped; ties go to the earliest class in
    declaration order.
    """
    tokens = [t for t in class_tokens(question) if t in model.vocabulary]
    vocab_size = len(model.vocabulary)
    posteriors: dict[QuestionCategory, float] = {}
    for category in model.classes:
        score = math.log(model.priors[category])
        denominator = model.class_totals[category] + model.alpha * vocab_size
        counts = model.token_counts[category]
        for token in tokens:
            score += math.log((counts.get(token, 0) + model.alpha) / denominator)
        posteriors[category] = score
    best = max(model.classes, key=lambda c: posteriors[c])
    for category in model.classes:  # earliest class wins exact ties
        if posteriors[category] == posteriors[best]:
            best = category
            break
    return best, posteriors


_TOKEN_RE = re.compile(r"[A-Za-z]+|\d+")


def extract_step_id(question: str) -> int:
    """The step number a question refers to.

    A number directly after the word "step" wins; otherwise a single
    number anywhere is accepted. Number words ("five") are not understood.
    """
    tokens = _TOKEN_RE.findall(question)
    numbers = [(i, t) for i, t in enumerate(tokens) if t.isdigit()]
    for i, t in numbers:
        if i > 0 and tokens[i - 1].lower() == "step":
            return int(t)
    if len(numbers) == 1:
        return int(numbers[0][1])
    if not numbers:
        raise NoStepReference("Please include the step number in your question.")
    raise AmbiguousStepReference(
        "Your question mentions several numbers; please ask about one step."
    )


# Interrogative framing that never helps retrieval.
_QUESTION_VERBS = frozenset(
    {"what", "whats", "explain", "define", "mean", "meaning", "definition", "tell"}
)


def extract_keywords(question: str) -> list[str]:
    """Normalized search keywords, stop words and framing removed."""
    keywords: list[str] = []
    seen: set[str] = set()
    for word in split_words(question):
        if word in _QUESTION_VERBS:
            continue
        token = normalize_token(word)
        if token is None or token in seen:
            continue
        seen.add(token)
        keywords.append(token)
    return keywords


_CATEGORY_KEYS = {c.value: c for c in QuestionCategory}


def load_training(path: Optional[Path] = None) -> TrainingSet:
    """Read the `category<TAB>question` training file."""
    if path is None:
        path = data_path("training_questions.tsv")
    examples: list[tuple[str, QuestionCategory]] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, question = line.partition("\t")
        category = _CATEGORY_KEYS.get(key.strip())
        if category is None or not question.strip():
            raise ValueError(f"bad training line: {line[:60]!r}")
        examples.append((question.strip(), category))
    return TrainingSet(examples=examples)


def stratified_cv_accuracy(
    data: TrainingSet, folds: int = 5, alpha: float = 1.0
) -> float:
    """K-fold accuracy with per-class round-robin fold assignment."""
    fold_of: dict[int, int] = {}
    per_class_seen: dict[QuestionCategory, int] = {c: 0 for c in QuestionCategory}
    for i, (_, category) in enumerate(data.examples):
        fold_of[i] = per_class_seen[category] % folds
        per_class_seen[category] += 1
    correct = 0
    for fold in range(folds):
        train = TrainingSet(
            [ex for i, ex in enumerate(data.examples) if fold_of[i] != fold]
        )
        held_out = [ex for i, ex in enumerate(data.examples) if fold_of[i] == fold]
        model = train_classifier(train, alpha=alpha)
        for question, category in held_out:
            predicted, _ = classify(model, question)
            if predicted is category:
                correct += 1
    return correct / len(data.examples)
