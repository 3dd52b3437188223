"""Inference-side toolkit for weakly supervised sound event detection."""
