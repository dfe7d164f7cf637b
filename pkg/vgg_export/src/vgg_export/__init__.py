"""Export pretrained VGG-16 trunk weights (through conv3-3) to GSTW."""

from .export import ExportManifest, export_vgg, load_source_state

__version__ = "0.1.0"
