"""Discrete-event simulator of software pre-/un-loading for near-data and in-memory PEs."""
