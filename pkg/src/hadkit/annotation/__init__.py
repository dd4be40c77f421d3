from .store import AgreementStats, AnnotationItem, AnnotationStore, Edit, Judgment
from .app import create_app

__all__ = [
    "AgreementStats",
    "AnnotationItem",
    "AnnotationStore",
    "Edit",
    "Judgment",
    "create_app",
]
