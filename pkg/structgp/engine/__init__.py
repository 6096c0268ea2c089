"""Numerical core of StructGP.

Nothing in this package imports Django, so experiment reps can be shipped to
worker processes as plain functions.
"""
