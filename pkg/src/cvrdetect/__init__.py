"""cvrdetect: appearance / motion / geometry fake-video detection experts with
Grad-CAM diagnosis and logit-fusion ensembling, desk-scale and CPU-only."""

__version__ = "0.1.0"
