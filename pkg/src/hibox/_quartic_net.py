"""Bernstein coefficients (x24) of the C^2 quartic generator on its
24 support triangles.  Generated by scripts/derive_quartic_net.py;
coefficient order follows hibox.boxspline.MI4."""

QUARTIC_NET_X24 = {
    (0, 0, 0): (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2),
    (0, 0, 1): (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2),
    (0, 1, 0): (0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 3, 4, 3, 2),
    (0, 1, 1): (0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 2),
    (0, 2, 0): (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 1, 0, 0, 0),
    (1, 0, 0): (0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 2),
    (1, 0, 1): (0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 3, 4, 3, 2),
    (1, 1, 0): (2, 3, 4, 4, 6, 8, 3, 6, 10, 12, 2, 4, 8, 12, 12),
    (1, 1, 1): (2, 3, 4, 4, 6, 8, 3, 6, 10, 12, 2, 4, 8, 12, 12),
    (1, 2, 0): (2, 4, 3, 8, 6, 4, 12, 10, 6, 3, 12, 12, 8, 4, 2),
    (1, 2, 1): (2, 1, 3, 0, 1, 4, 0, 0, 1, 3, 0, 0, 0, 1, 2),
    (1, 3, 0): (0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0),
    (2, 0, 1): (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 1, 0, 0, 0),
    (2, 1, 0): (2, 1, 3, 0, 1, 4, 0, 0, 1, 3, 0, 0, 0, 1, 2),
    (2, 1, 1): (2, 4, 3, 8, 6, 4, 12, 10, 6, 3, 12, 12, 8, 4, 2),
    (2, 2, 0): (12, 12, 12, 8, 10, 8, 4, 6, 6, 4, 2, 3, 4, 3, 2),
    (2, 2, 1): (12, 12, 12, 8, 10, 8, 4, 6, 6, 4, 2, 3, 4, 3, 2),
    (2, 3, 0): (2, 3, 1, 4, 1, 0, 3, 1, 0, 0, 2, 1, 0, 0, 0),
    (2, 3, 1): (2, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 1, 1): (0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0),
    (3, 2, 0): (2, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 2, 1): (2, 3, 1, 4, 1, 0, 3, 1, 0, 0, 2, 1, 0, 0, 0),
    (3, 3, 0): (2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 3, 1): (2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
}
