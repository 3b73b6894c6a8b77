"""Bundled example logs.

``keyword_creation`` is a 20-event recording of an ERP keyword-creation
workflow (login, profile selection, navigation, form entry, logout) with
six UI groups and no timestamps; it exercises map and list cell
literals, the "none" action type of pre-abstracted events, and dropdown
current states. ``raw_login`` is the unabstracted counterpart of its
first event - four raw interactions in the login mask, including a
mistyped password - paired with ``login.rules`` for the abstraction
transform.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .model import UILog
from .tabular import ingest
from .transform import AbstractionRule, load_rules


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    return Path(str(resources.files("uilog") / "data" / name))


def keyword_creation_csv() -> str:
    return fixture_path("keyword_creation.csv").read_text(encoding="utf-8")


def keyword_creation_log() -> UILog:
    log, _ = ingest(keyword_creation_csv())
    return log


def raw_login_csv() -> str:
    return fixture_path("raw_login.csv").read_text(encoding="utf-8")


def raw_login_log() -> UILog:
    log, _ = ingest(raw_login_csv())
    return log


def login_rule() -> AbstractionRule:
    return load_rules(fixture_path("login.rules").read_text(encoding="utf-8"))[0]
