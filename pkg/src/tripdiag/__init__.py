"""tripdiag: a diagnostic toolkit for travel-planning agents.

The package decomposes travel-plan evaluation into five independently scored
sub-tasks (constraint extraction, tool use, plan generation, error
identification, error correction), each fed oracle intermediate inputs so
one capability is measured at a time.
"""

__version__ = "0.1.0"
