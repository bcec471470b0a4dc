"""Fault injection of ERC-rule violations into Solidity token contracts, and
scoring of automated auditors against the injected ground truth."""

__version__ = "0.1.0"
