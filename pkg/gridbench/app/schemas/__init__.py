"""
Pydantic schemas for scenarios and runs.
"""
