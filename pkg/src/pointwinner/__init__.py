"""Predicting the winner of a tennis point from the match state when the serve lands."""

__version__ = "0.1.0"
