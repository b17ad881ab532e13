"""Threshold and periodic receiver switching for MISO multicast SWIPT with random beams."""

from .analytic import (AsymptoticValidityWarning, PolicyKind, REPoint, Source, SwitchPolicy,
                       ps_avg_power, ps_avg_rate, ps_outage, ps_power, ps_rate, ps_scalings,
                       ts_avg_power, ts_avg_rate, ts_outage_asymptotic, ts_outage_exact, ts_power,
                       ts_power_scaling, ts_rate, ts_rate_closed_n1, ts_rate_closed_n2,
                       ts_rate_quadrature, ts_rate_scaling, ts_threshold_for_power_scaling)
from .channel import BeamKind, BeamScheme, ChannelRealization, RngStream, SystemParams
from .mcsim import (Estimate, McConfig, estimate_avg_re, estimate_block_re,
                    estimate_power_outage, estimate_rate_scaling)
from .network import NetworkResult, NetworkSpec, simulate_network
from .specfun import DomainError

__version__ = "0.1.0"
