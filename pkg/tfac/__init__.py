"""Time-fractional Allen-Cahn solver: variable-step L1_R Crank-Nicolson with fast SOE history."""
