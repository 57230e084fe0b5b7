""" Thermal infrared face matching across pose using an AAM ensemble """

__version__ = ""

try:
    # pylint: disable=no-member
    import thermoface._version
    __version__ = thermoface._version.__version__

except ImportError:
    # Fake a version string in desperation
    __version__ = '0.1.0+git'
