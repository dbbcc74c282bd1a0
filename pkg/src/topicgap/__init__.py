"""
Measure the distance between a research corpus and an action corpus with structural
topic models, topic correlation networks and cross-corpus cosine similarity.
"""
__version__ = "1.0.0"
