"""Real-time hand-gesture annotation toolkit.

Skeleton geometry and rasterization, a trainable landmark classifier, the
debounce interval segmenter, a streaming annotation server, and the CLI
tooling that ties them together.
"""

__version__ = "0.1.0"
