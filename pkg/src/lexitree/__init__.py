"""Finite relational structures, lexicographic and tree products."""
