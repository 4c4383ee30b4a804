"""homobol: space-homogeneous Boltzmann solver for hard potentials with
run-time verification of the analytic moment, entropy and tail bounds."""

__version__ = "0.1.0"
