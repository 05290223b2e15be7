"""evops: EV operations service.

Battery diagnostics, charging-station intrusion detection, Shapley-based
explanations, forecasting, and a natural-language charging assistant, served
behind a privacy-enforcing HTTP gateway with federated training support.
"""

__version__ = "0.1.0"
