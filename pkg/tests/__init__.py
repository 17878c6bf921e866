"""
Test package for sparsemask.
"""
