# Puts the repository root on sys.path so tests import the gridbench package in place.
