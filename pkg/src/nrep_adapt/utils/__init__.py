"""Asset-generation helpers for nrep_adapt."""
