"""Random block-band matrix ensembles and their equilibration dynamics."""
__version__ = "0.1.0"
