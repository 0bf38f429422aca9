"""Mixed digital-twin platooning testbed.

Emulated-physical and purely virtual vehicles meet in one unified traffic
environment: a cloud hub fuses their states into a shared pool at 50 Hz and
routes control from CACC stacks, scripted car-followers, and human drivers
back out to the vehicles. The scenario harness reproduces closed-loop
platooning experiments and scores them for collisions and string stability.
"""

__version__ = "0.1.0"
