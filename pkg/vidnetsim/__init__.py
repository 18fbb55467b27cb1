"""vidnetsim: discrete-event simulation of GOP video streaming over a disaster-area broadband network."""

__version__ = "1.0.0"
