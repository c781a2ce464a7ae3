"""Enumerate the admissible order data and build exact stunted-tent bones.

Everything in this demo is exact: the bicritical parameters come out of
backward branch substitution in dyadic arithmetic, and the bone limits from
linear solves, so the printed fractions are the true values.
"""

from mapbones import (
    OrderData, admissible_order_data, order_data_to_bicritical_itinerary,
    st_bicritical_params, st_bone, st_distinguished_points,
)

print("Admissible order data by half-period:")
for n in (1, 2, 3):
    ods = admissible_order_data(n)
    print(f"  period {2 * n}: {len(ods)} ->", ", ".join(str(od) for od in ods))

print("\nBicritical parameters and bone limits (exact dyadics):")
for n in (1, 2):
    for od in admissible_order_data(n):
        v0, w0 = st_bicritical_params(od)
        bone = st_bone(od)
        it = order_data_to_bicritical_itinerary(od)
        print(f"  {od}: itinerary {it}")
        print(f"      (v0, w0) = ({v0}, {w0}); left bone "
              f"{{{bone.v1}, {bone.v2}}} x [{bone.w0}, 1]")

print("\nDistinguished points on the period-2 left bone, depth 2m = 4:")
bone = st_bone(OrderData((1,), (1,)))
for rec in st_distinguished_points(bone, 2):
    where = f"({float(rec.param.v):.4f}, {float(rec.param.w):.4f})"
    extra = f" joint data {rec.jod}" if rec.jod else ""
    if rec.span:
        extra += f" on w-range ({rec.span[0]}, {rec.span[1]})"
    print(f"  {rec.segment:>8} {rec.kind:<9} at {where} depth {rec.depth}{extra}")
