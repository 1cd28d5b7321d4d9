"""Opinion mining on tweet streams: filtering, LDA topics, coherence-driven
hyperparameter search, LSTM sentiment, and figure-data reports.

Every randomized stage takes an explicit seed and produces byte-identical
outputs for the same inputs and seed.
"""

__version__ = "0.1.0"
