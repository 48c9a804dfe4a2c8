"""Monocular obstacle avoidance from optical flow."""

__version__ = "0.1.0"
