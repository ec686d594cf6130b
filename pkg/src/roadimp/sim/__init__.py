"""Cellular-automaton traffic simulation with junction rules."""
