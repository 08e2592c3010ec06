"""
Filling a space-time hole
=========================

Voxels under the mask are unknown. Only patches that stay clear of the hole
are used as sources, and known voxels are put back after every update, so
the output is identical to the input outside the hole.
"""

import sys
from pathlib import Path

import numpy as np

from _clips import scrolling_texture
from vidpnn import GenerationConfig, UnsatisfiableConstraintError, inpaint, write_video

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out_dir.mkdir(exist_ok=True)

x = scrolling_texture()
hole = np.zeros(x.shape[:3], bool)
hole[3:9, 20:36, 20:36] = True

damaged = x.copy()
damaged[hole] = 0.0
write_video(damaged, out_dir / "damaged.y4m")

y = inpaint(x, hole, GenerationConfig(seed=4))
write_video(y, out_dir / "filled.y4m")

print("outside the hole unchanged:", bool(np.array_equal(y[~hole], x[~hole])))
print(f"mean |filled - original| inside the hole: {np.abs(y - x)[hole].mean():.4f}")

# %%
# A mask that leaves no clean source patch cannot be filled.
stripes = np.zeros(x.shape[:3], bool)
stripes[:, :, ::6] = True
try:
    inpaint(x, stripes)
except UnsatisfiableConstraintError as e:
    print("striped mask rejected:", e)
