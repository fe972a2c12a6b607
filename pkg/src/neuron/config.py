"""Locate packaged data files and parse the template config format.

Data files ship inside the package; each can be overridden through an
environment variable so deployments can re-word narrations or swap the
question corpus without rebuilding.
"""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

TEMPLATES_ENV = "NEURON_TEMPLATES"
CORPUS_ENV = "NEURON_CORPUS"
TRAINING_ENV = "NEURON_TRAINING"

_ENV_BY_NAME = {
    "templates.cfg": TEMPLATES_ENV,
    "definitions.tsv": CORPUS_ENV,
    "training_questions.tsv": TRAINING_ENV,
}


def data_path(name: str) -> Path:
    """Path of a packaged data file, honouring its override variable."""
    env_var = _ENV_BY_NAME.get(name)
    if env_var:
        override = os.environ.get(env_var)
        if override:
            return Path(override)
    return Path(str(resources.files("neuron").joinpath("data").joinpath(name)))


def parse_template_file(text: str) -> dict[str, list[str]]:
    """Parse ``key<TAB>template`` lines into alternatives per key.

    Blank lines and ``#`` comments are skipped. A key repeated on several
    lines collects alternatives in file order; the renderer uses the first
    one whose placeholders all resolve.
    """
    templates: dict[str, list[str]] = {}
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, template = line.partition("\t")
        key = key.strip()
        template = template.strip()
        if not key or not template:
            continue
        templates.setdefault(key, []).append(template)
    return templates


def load_templates(path: Path | None = None) -> dict[str, list[str]]:
    if path is None:
        path = data_path("templates.cfg")
    return parse_template_file(path.read_text(encoding="utf-8"))
