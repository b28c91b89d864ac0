"""Shared test utilities."""
import math

import numpy as np

from rdslab.billiard import CollisionState, collide


def collision_fd(table, s, theta, h=1e-6):
    """Central finite-difference Jacobian of (sigma, theta) -> (sigma1, theta1), sigma = L s."""
    L = table.length
    s1 = collide(table, CollisionState(s, theta)).next.s

    def image(ds, dth):
        nxt = collide(table, CollisionState(s + ds / L, theta + dth)).next
        # unwrap the image next to the unperturbed one
        d = nxt.s - s1
        d -= math.floor(d + 0.5)
        return np.array([(s1 + d) * L, nxt.theta])

    col_s = (image(h, 0.0) - image(-h, 0.0)) / (2 * h)
    col_t = (image(0.0, h) - image(0.0, -h)) / (2 * h)
    return np.column_stack([col_s, col_t])


def rel_error(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))
