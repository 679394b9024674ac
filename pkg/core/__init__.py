"""Position/momentum joint measurement toolkit on a periodic lattice."""
