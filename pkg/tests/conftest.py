import numpy as np


def affine_rel_diff(est_a, est_b) -> float:
    """Relative difference between two affine rules, treating (A, b) as one object."""
    num = np.linalg.norm(est_a.A - est_b.A) + np.linalg.norm(est_a.b - est_b.b)
    den = np.linalg.norm(est_b.A) + np.linalg.norm(est_b.b)
    return num / den


def random_spd(rng, n, eig_low=0.5, eig_high=2.0) -> np.ndarray:
    """Well-conditioned SPD matrix with eigenvalues in [eig_low, eig_high]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = rng.uniform(eig_low, eig_high, size=n)
    return (Q * eigs) @ Q.T
