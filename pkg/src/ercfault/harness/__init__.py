"""Evaluation harness: prompt construction, model transports, response parsing, scoring and reports."""
