"""Feasible primal recovery for block-coupled integer programs."""
