"""EVSE FedFuse: federated multimodal intrusion detection for EV charging stations."""

__version__ = "0.1.0"
