"""Byte-statistics side-channel analysis of image-labeling CAPTCHAs."""

__version__ = "0.1.0"
