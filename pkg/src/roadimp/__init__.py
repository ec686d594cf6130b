"""Importance of road-network segments from coherent-system reliability and traffic simulation."""

__version__ = "0.1.0"
