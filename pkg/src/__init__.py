"""Adaptive Partitioning Emulator: Gaussian-process emulation and benchmark package"""

__version__ = "0.1"
__author__ = "Computer Experiments Group"
