"""Desk-scale interactive continual skill learning.

A simulated two-embodiment tabletop world, a queryable skill library with
semantic and skill-space search, cross-embodiment demonstration alignment
encoders, chunked-action imitation policies with per-skill low-rank adapters,
and a dialogue state machine that asks a user for enactments and
demonstrations when it does not know a requested task.
"""

__version__ = "0.1.0"
