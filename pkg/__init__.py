"""
Package orientnav - task-aware object navigation with a pluggable scorer.
"""
