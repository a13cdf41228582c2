from .backends import (
    BackendDescriptor,
    LLMBackend,
    RemoteBackend,
    RuleOracleBackend,
    ScriptedBackend,
    load_backends,
    output_json,
)
from .commands import (
    NO_ACTION,
    AgentOutput,
    FunctionCall,
    parse_command_field,
    parse_function_call,
    parse_output,
)
from .config import MANAGER_FUNCTIONS, AgentConfig, AgentRole, PromptFunction, load_agent_configs
from .prompt import AgentPrompt, build_prompt
from .runtime import AgentRuntime, StepRequest, append_summary, sanitize_summary

__all__ = [
    "BackendDescriptor",
    "LLMBackend",
    "RemoteBackend",
    "RuleOracleBackend",
    "ScriptedBackend",
    "load_backends",
    "output_json",
    "NO_ACTION",
    "AgentOutput",
    "FunctionCall",
    "parse_command_field",
    "parse_function_call",
    "parse_output",
    "MANAGER_FUNCTIONS",
    "AgentConfig",
    "AgentRole",
    "PromptFunction",
    "load_agent_configs",
    "AgentPrompt",
    "build_prompt",
    "AgentRuntime",
    "StepRequest",
    "append_summary",
    "sanitize_summary",
]
