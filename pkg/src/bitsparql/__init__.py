"""SPARQL BGP/OPTIONAL query engine over compressed BitMat indexes."""

__version__ = "0.1.0"
