"""GKM-sheaf computations for equivariant cohomology of representation varieties."""
