"""Multimodal (audio + wrench) contact-event detection."""

__version__ = "0.1.0"
