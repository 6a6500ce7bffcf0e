"""Trees and turtles: state machine replication built from tree-turtle
subprotocols, run inside a deterministic network simulator."""

__version__ = '0.3.0'
