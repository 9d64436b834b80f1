"""
netsec_lmf - Local Mean Field analysis of security investment under epidemic risk
"""
__version__ = "0.1.0"
