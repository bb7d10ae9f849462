"""
Package containing scorer implementations.
"""

from typing import Dict, Type
from .base_scorer import ScorerPlugin
from .oracle_scorer import OracleScorer
from .scripted_scorer import ScriptedScorer
from .remote_scorer import RemoteScorer
from .recording_scorer import RecordingScorer

# Registry of all available scorers
SCORER_REGISTRY: Dict[str, Type[ScorerPlugin]] = {
    "oracle": OracleScorer,
    "scripted": ScriptedScorer,
    "remote": RemoteScorer,
    "recording": RecordingScorer,
}
