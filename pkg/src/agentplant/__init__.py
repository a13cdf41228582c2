"""Event-driven plant control with LLM agents, plus dataset tooling for testing
and fine-tuning them."""

__version__ = "0.1.0"

from .events import (
    Event,
    EventLogMemory,
    EventSource,
    SemanticLevel,
    Subscription,
    SubscriptionFilter,
    parse_event_line,
    render_event,
)
from .observer import Observer, ObserverRule, RuleSet, load_rules
from .session import Proposal, ScriptAction, Session, SessionConfig, replay_script
from .sim import LayoutConfig, PlantSim, RawChange, load_layout

__all__ = [
    "__version__",
    "Event",
    "EventLogMemory",
    "EventSource",
    "SemanticLevel",
    "Subscription",
    "SubscriptionFilter",
    "parse_event_line",
    "render_event",
    "Observer",
    "ObserverRule",
    "RuleSet",
    "load_rules",
    "Proposal",
    "ScriptAction",
    "Session",
    "SessionConfig",
    "replay_script",
    "LayoutConfig",
    "PlantSim",
    "RawChange",
    "load_layout",
]
