"""Trace logistic-composition bones and classify their crossings.

The period-2 bone has the closed form w = 1/(8 v (1 - v)), which the
continuation reproduces to machine precision; crossings are polished on the
joint periodicity system and labeled with their joint order data.
"""

import math

from mapbones import (
    OrderData, q_boundary_endpoints, q_primary_intersection,
    q_secondary_intersections, traced_bone, transversality_check,
)

od2 = OrderData((1,), (1,))
bone = traced_bone(od2, "left")
dev = max(abs(w - 1 / (8 * v * (1 - v))) for v, w in bone.polyline)
va, vb = q_boundary_endpoints(od2)
print(f"period-2 bone: {len(bone.polyline)} points, "
      f"closed-form deviation {dev:.2e}")
print(f"  boundary endpoints {va:.12f}, {vb:.12f} "
      f"(exact: (2 -+ sqrt 2)/4 = {(2 - math.sqrt(2)) / 4:.12f}, "
      f"{(2 + math.sqrt(2)) / 4:.12f})")
print(f"  primary intersection: {tuple(round(x, 12) for x in bone.primary_vertex().param)}")

od4 = OrderData((1, 2), (2, 1))
left4 = traced_bone(od4, "left")
print(f"\nperiod-4 bone {od4}: primary at "
      f"{tuple(round(x, 10) for x in left4.primary_vertex().param)}")

print("\ncrossings of the left 4-bone with the right 2-bone:")
right2 = traced_bone(od2, "right")
for rec in q_secondary_intersections(left4, right2):
    ang = transversality_check(left4, right2, rec.param)
    print(f"  {rec.kind} at ({rec.param.v:.10f}, {rec.param.w:.10f}) "
          f"joint data {rec.data}, crossing angle {ang:.3f} rad")

print("\ncrossings of the left 4-bone with the right 4-bone (same data):")
right4 = traced_bone(od4, "right")
for rec in q_secondary_intersections(left4, right4):
    print(f"  {rec.kind} at ({rec.param.v:.10f}, {rec.param.w:.10f}) "
          f"data {rec.data}")

print("\nperiod-6 primary intersections:")
from mapbones import admissible_order_data
for od in admissible_order_data(3):
    p = q_primary_intersection(od)
    print(f"  {od}: ({p.v:.10f}, {p.w:.10f})")
