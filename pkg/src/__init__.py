"""mmWave WLAN simulator - Wi-Fi-assisted beam training coordination for 60 GHz access points"""

__version__ = "0.1.0"
__author__ = "mmwave-sim contributors"
