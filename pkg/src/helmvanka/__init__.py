"""Shifted-Laplacian multigrid with additive Vanka smoothing for Helmholtz."""
