"""Local EMR-generation HTTP service."""

from .app import ServiceState, create_app, load_state
from .emr import SENTINEL, assemble_document
from .kb import KnowledgeEntry, load_kb, retrieve_context
from .sessions import SessionStore

__all__ = [
    "ServiceState", "create_app", "load_state",
    "SENTINEL", "assemble_document",
    "KnowledgeEntry", "load_kb", "retrieve_context",
    "SessionStore",
]
