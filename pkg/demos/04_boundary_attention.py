#!/usr/bin/env python3
"""The boundary-attention gate on a feature map with a sharp edge.

The gate squeezes channels, looks at a 7x7 neighbourhood, and produces a
sigmoid coefficient per entry.  Coefficients respond only inside the 7x7
receptive field of a perturbation, and the gated output never exceeds the
input in magnitude.
"""

import numpy as np

from wingraph.boundary import BAParams, ba_apply, ba_coefficients, ba_param_count
from wingraph.tensor import Tensor

rng = np.random.default_rng(3)
c, h, w = 4, 12, 12

params = BAParams.create(c, r_ba=2, rng=rng, prefix="ba")
print(f"parameters: {sum(p.data.size for p in params.named_parameters())} "
      f"(closed form {ba_param_count(c, 2)})")

# Zero-init restoring conv -> every coefficient is exactly sigmoid(0) = 0.5
y = Tensor(rng.normal(size=(c, h, w)))
coeffs = ba_coefficients(y, params)
print("zero-init coefficients are all 0.5:", bool((coeffs.data == 0.5).all()))

# Train-like weights: gate becomes input dependent, stays in (0, 1)
params.unsqueeze.data = rng.normal(0, 0.5, params.unsqueeze.shape)
feature = np.zeros((c, h, w))
feature[:, :, : w // 2] = 1.0  # a vertical edge
feature += rng.normal(0, 0.05, feature.shape)
y = Tensor(feature)
coeffs = ba_coefficients(y, params).data
print(f"coefficient range: ({coeffs.min():.4f}, {coeffs.max():.4f})")

gated = ba_apply(y, params).data
assert (np.abs(gated) <= np.abs(y.data)).all()
print("gating never amplifies: |z| <= |y| everywhere")

# Locality: poke one pixel, watch the 7x7 footprint
base = ba_coefficients(y, params).data
poked = feature.copy()
poked[:, 6, 6] += 1.0
diff = np.abs(ba_coefficients(Tensor(poked), params).data - base).sum(axis=0)
rows = np.nonzero(diff.any(axis=1))[0]
cols = np.nonzero(diff.any(axis=0))[0]
print(f"perturbing (6,6) moved coefficients in rows {rows.min()}..{rows.max()}, "
      f"cols {cols.min()}..{cols.max()} (7x7 footprint)")
