"""Mesh a random space-time point cloud and poke at the result.

Walks through the core pipeline: bounding tesseract construction,
incremental Delaunay insertion, the empty-circumhypersphere audit, and
the p4m / projected-tet3 exports.
"""

import numpy as np

from pentamesh import MetricField, audit_delaunay, triangulate
from pentamesh.meshio import dumps_p4m, dumps_tet3

rng = np.random.default_rng(7)
points = rng.random((150, 4))

# --- isotropic mesh ---------------------------------------------------------
mesh = triangulate(points)
print(f"isotropic mesh: {mesh.n_alive} pentatopes over {mesh.n_vertices} vertices")
print(f"total hypervolume (hull of the cloud): {mesh.total_hypervolume():.6f}")

report = audit_delaunay(mesh)
print(f"audit: {len(report.violations)} strict violations over {report.n_checked} pairs")

# --- anisotropic mesh -------------------------------------------------------
# a characteristic-speed bump near t = 0.5 stretches the metric's time axis
field = MetricField.speed(c0=1.0, beta=0.5, center=0.5)
aniso = triangulate(points, field)
print(f"anisotropic mesh: {aniso.n_alive} pentatopes (same points, new metric)")

# --- round-trippable text format -------------------------------------------
text = dumps_p4m(mesh)
print("p4m header:", text.splitlines()[0], "| lines:", len(text.splitlines()))

# --- projected tetrahedral facets for external 3D viewers ------------------
tet3 = dumps_tet3(mesh)
print("tet3 header:", tet3.splitlines()[0],
      "| tets:", tet3.splitlines()[2 + mesh.n_vertices].split()[1])
