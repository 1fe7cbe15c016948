"""Cubature and discrete Fourier transforms for band-limited functions on compact manifolds."""
