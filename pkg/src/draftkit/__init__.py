"""Draft-phase assistant for MOBA matches.

A two-level sequence model reads each player's recent match history and the
current state of a pick/ban draft, then predicts what the acting player will
pick and which team will win. On top of it sit ranking strategies for
champion recommendation, an evaluation harness with popularity baselines,
and an HTTP service for interactive drafting.
"""

__version__ = "0.1.0"
