"""Common fixed points of four maps on partial metric spaces, with partial
Hausdorff tools for iterated function systems and an integral-equation solver."""

__version__ = "0.1.0"
