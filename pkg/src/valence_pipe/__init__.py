"""Wearable PPG valence pipeline."""
