"""
Helpers.
"""
