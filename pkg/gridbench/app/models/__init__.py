"""
Network, state, constraint and topology models.
"""
