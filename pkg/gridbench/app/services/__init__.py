"""
Service layer for simulation logic.
"""
