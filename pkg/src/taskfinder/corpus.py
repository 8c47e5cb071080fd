"""Bundled desk-scale corpus: 30 synthetic catalog tasks and 24 queries.

The queries cover six archetypes, four each in file order: exact name,
synonym phrasing, abbreviation, natural-language sentence, multi-word
compound, and typo. Rationales carry the domain jargon (ERSEA, DRDP, IEP)
that never appears in catalog metadata, so the corpus exercises the
lexicon's reason for existing.
"""

from __future__ import annotations

from importlib import resources

from .catalog import TaskCatalog, load_catalog
from .lexicon import TestCase, load_suite

ARCHETYPES = ("exact", "synonym", "abbreviation", "natural_language", "multi_word", "typo")
QUERIES_PER_ARCHETYPE = 4


def _data_file(name: str):
    return resources.files("taskfinder").joinpath("data").joinpath(name)


def load_desk_catalog() -> TaskCatalog:
    with resources.as_file(_data_file("desk_catalog.tsv")) as path:
        return load_catalog(path)


def load_desk_suite() -> list[TestCase]:
    with resources.as_file(_data_file("desk_suite.tsv")) as path:
        return load_suite(path)


def archetype_of(case_index: int) -> str:
    """Archetype of the suite entry at ``case_index`` (file order)."""
    if case_index < 0:
        raise ValueError(f"case index must be >= 0, got {case_index}")
    group = case_index // QUERIES_PER_ARCHETYPE
    if group >= len(ARCHETYPES):
        raise ValueError(f"case index {case_index} beyond the bundled suite")
    return ARCHETYPES[group]
