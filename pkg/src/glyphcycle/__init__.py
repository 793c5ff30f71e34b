"""Unpaired glyph style transfer with ResNet and DenseNet CycleGAN generators."""

__version__ = "0.1.0"
