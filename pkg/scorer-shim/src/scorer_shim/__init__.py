"""Model server for factual-consistency scoring over the wire protocol."""

__version__ = "0.1.0"
