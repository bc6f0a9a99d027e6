"""sonarm: a simulated 6-DOF arm whose motion you can hear.

Kinematics drive synthetic motor voices, the result is blended with a
synthetic layer, processed through a small DSP graph under a declarative
mapping, spatialized over a speaker ring plus a base point source, and
exposed live over OSC and a WebSocket control API.
"""

__version__ = "0.1.0"
