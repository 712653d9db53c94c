"""Coverage, throughput and energy efficiency of sleep-controlled
multi-tier cellular networks with clustered users.

Subpackages by concern:
  specfun     deterministic special functions
  pointproc   spatial point-process sampling and network realizations
  channel     directional mmWave link gains and SINR assembly
  load        per-cell load generating functions and sleep policies
  analytic    closed-form coverage, throughput and energy metrics
  montecarlo  cross-validating system-level simulator
  cli         command-line front end
"""

__version__ = "0.1.0"
