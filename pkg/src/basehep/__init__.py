"""Knowledge-driven base human error probability estimation.

Ingests IDHEAS-style error-rate tables into an in-process knowledge graph,
runs a two-part LLM pipeline (four decomposition agents, then few-shot
attribute extraction), supports expert review of the extracted attributes,
and resolves the base HEP by ranking table entries against the accepted
attribute set.
"""

__version__ = "0.1.0"
