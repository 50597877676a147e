"""
PerfOracle: metric selection and RTT-predictor training from node monitoring data.
"""
