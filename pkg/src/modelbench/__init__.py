"""modelbench: run the TLC model checker, explore annotated state graphs,
and drive LLM-assisted explanation and repair of TLA+ specifications."""

__version__ = "0.1.0"
