"""artpress: base prompt to print-ready artwork.

Prompt enhancement (LLM, RAG multishot, template), native classical
upscalers, no-reference quality metrics, GPU telemetry aggregation, and a
benchmark harness, all behind one CLI.
"""

__version__ = "0.1.0"
