"""EEA network benchmark package."""
