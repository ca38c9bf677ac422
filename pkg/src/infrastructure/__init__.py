# Infrastructure Layer - Adapters and Command Line
"""
This module contains the infrastructure layer: sweep kernels, exact solvers,
text codecs, the file-based campaign store and the click command line.
"""
