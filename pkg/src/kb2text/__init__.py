"""kb2text: describe a structured knowledge base in natural language.

A pointer-generator over KB triples with slot-aware attention, table-position
self-attention, coverage, and a KB-reconstruction evaluation stack.
"""

__version__ = "0.1.0"
