"""Walk a raw frame through the document preprocessing pipeline.

A synthetic "ID card" is painted into a large frame at a skewed
quadrilateral, then rectified to the canonical 464x744 rectangle, border
masked, and center cropped to 448x728 -- the geometry every presentation
image shares.  Outputs land in demos/output/.
"""

import os

import numpy as np

from padbench.imaging import ImageBuffer, Quad, save_image
from padbench.pipeline import PreprocessConfig, preprocess_presentation, rectify_document

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

rng = np.random.default_rng(0)

# paint a frame: noisy background with a bright, textured card region
frame = rng.integers(0, 80, (1920, 1080, 3), dtype=np.uint8)
card = np.kron(rng.integers(120, 256, (31, 20, 3)), np.ones((24, 24, 1))).astype(np.uint8)
frame[400:400 + card.shape[0], 200:200 + card.shape[1]] = card
frame = ImageBuffer(frame)

# the annotated document corners (TL, TR, BR, BL), slightly off-axis
quad = Quad((210.0, 410.0), (660.0, 420.0), (650.0, 1130.0), (205.0, 1120.0))

cfg = PreprocessConfig()  # 464x744 projection, 16 px mask, 448x728 crop
print("frame:        %dx%dx%d" % (frame.width, frame.height, frame.channels))

rectified = rectify_document(frame, quad, cfg)
print("rectified:    %dx%dx%d" % (rectified.width, rectified.height, rectified.channels))

out = preprocess_presentation(frame, quad, cfg)
print("preprocessed: %dx%dx%d" % (out.width, out.height, out.channels))

save_image(rectified, os.path.join(OUT, "rectified.png"))
save_image(out, os.path.join(OUT, "preprocessed.png"))
print("wrote %s/rectified.png and %s/preprocessed.png" % (OUT, OUT))

# a wider mask leaves a visible black border inside the crop
wide = preprocess_presentation(frame, quad, PreprocessConfig(mask_margin=40))
save_image(wide, os.path.join(OUT, "preprocessed_wide_mask.png"))
border = wide.pixels[:32, :, :]
print("top rows with 40 px mask are zero:", bool((border[:24] == 0).all()))
