"""
Thermodynamic formalism for subsystems of the checkerboard pillow maps.
"""
default_app_config = "tilepress.apps.TilepressApp"

# following PEP 440
__version__ = "1.0"
