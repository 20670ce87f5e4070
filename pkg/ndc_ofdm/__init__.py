"""
NDC-OFDM link simulation and analysis toolkit.

Features:
- Unipolar optical OFDM modulators (NDC, DCO-OSM, ACO-OSM)
- Lambertian LOS channel model and preset 2x2 optical MIMO channels
- ZF receiver with spatial index detection and bipolar reconstruction
- Closed-form Bussgang BER analysis of NDC-OFDM
- Deterministic, parallel Monte Carlo BER sweeps
"""

from ndc_ofdm.config import VERSION

__version__ = VERSION
