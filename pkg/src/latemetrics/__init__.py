"""SLA-based latency metrics for autoscaling experiments.

Computes conventional latency statistics and the M1-M5 violation metrics
from task traces, and ships a small processor-sharing cluster simulator
with reactive and proactive horizontal autoscalers to produce them.
"""

__version__ = "0.1.0"
