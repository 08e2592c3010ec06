"""
How generation time grows with resolution
=========================================

The solver does a fixed amount of work per query patch per sweep, so total
time should grow roughly in proportion to the number of voxels. This times
``generate`` at a few frame sizes (add ``--full`` for 256x256) and fits a
line in log-log space.
"""

import json
import sys

from vidpnn.metrics import bench

sizes = [(64, 64), (128, 128)]
if "--full" in sys.argv:
    sizes.append((256, 256))

report = bench(sizes, frames=13)
for run in report["runs"]:
    print(f"{run['height']}x{run['width']}: {run['seconds']:.1f} s for {run['voxels']} voxels")
print(f"log-log slope: {report['slope']:.2f}")
print(json.dumps(report))
