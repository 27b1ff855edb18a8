"""
Estimating object distance from depth
=====================================

An open door frame is a good case for segmentation. The centre of its
bounding box looks through the opening at the room behind, so the centre-pixel
estimate is far too large. The masked mean only averages the frame itself.
"""

# %%
import numpy as np

from vlnloop.perception import BBox, DepthMap, SegMask, object_distance_center, object_distance_masked

size = 16
depth = np.full((size, size), 4.0)        # back wall of the next room
frame = np.zeros((size, size), dtype=bool)
frame[2:14, 2:14] = True
frame[4:14, 4:12] = False                 # the opening
depth[frame] = 1.4                        # the door frame itself
bbox = BBox(2, 2, 14, 14)

print("centre pixel :", object_distance_center(DepthMap(depth), bbox))
print("masked mean  :", object_distance_masked(DepthMap(depth), bbox, SegMask(frame)))

# %%
# Invalid depth (zero or NaN) is skipped. Knock out a strip of the frame and
# the estimate does not move.
noisy = depth.copy()
noisy[2, 2:14] = 0.0
print("with dropout :", object_distance_masked(DepthMap(noisy), bbox, SegMask(frame)))

# %%
# Masks travel as run-length encodings, with depth as 16-bit millimetre PGMs.
rle = SegMask(frame).to_rle()
print("rle size", rle["size"], "runs", len(rle["rle"]))
assert np.array_equal(SegMask.from_rle(rle).bits, frame)
