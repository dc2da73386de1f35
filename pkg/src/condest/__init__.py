"""Joint vs conditional likelihood estimation for statistical parsing and
tagging: PCFGs, bitag HMM taggers, and stochastic shift-reduce parsers,
with the treebank transformations and evaluation machinery needed to run
the comparison on any bracketed-tree corpus."""

__version__ = "0.1.0"
