"""Spherical centroid features and the rotation-free error norm.

Run with ``python demos/01_features.py``.
"""

import numpy as np

from quadvs.features import centroid_from_points, project_to_sphere
from quadvs.rotations import skew

rng = np.random.default_rng(0)

# Four marker corners 0.4 m in front of the camera, seen on the image plane.
Q = np.array([[-0.05, -0.05, 0.4], [0.05, -0.05, 0.4], [0.05, 0.05, 0.4], [-0.05, 0.05, 0.4]])
q = Q[:, :2] / Q[:, 2:]
s = np.array([project_to_sphere(p) for p in q])
print("unit vectors on the sphere:\n", s.round(4))

# The centroid of the unit vectors is the feature; its gain needs the ranges,
# which only the simulator (or a known virtual point set) can supply.
c = centroid_from_points(Q)
print("centroid h =", c.h.round(4), " |h| =", round(float(np.linalg.norm(c.h)), 4))
print("gain L eigenvalues =", np.linalg.eigvalsh(c.L).round(4))

# Translating the camera towards the marker moves h at rate -L v.
v = np.array([0.0, 0.0, 0.1])
h = 1e-6
c2 = centroid_from_points(Q - h * v)
print("finite-difference rate =", ((c2.h - c.h) / h).round(5), " -L v =", (-c.L @ v).round(5))

# A pure camera rotation moves every feature by -[W] x e, which never changes |e|.
e = rng.normal(size=3) * 0.1
W = rng.normal(size=3)
print("e'[W]e =", float(e @ skew(W) @ e))
