"""Regenerates the committed test fixtures. Output is deterministic."""
import numpy as np
from PIL import Image

rng = np.random.default_rng(20201018)

# Content: smooth vertical gradient with a bright disc and a dark bar.
y, x = np.mgrid[0:32, 0:32]
content = np.zeros((32, 32, 3), dtype=np.float64)
content[..., 0] = 40 + 3 * y
content[..., 1] = 60 + 2 * x
content[..., 2] = 120 - 2 * y + x
disc = (x - 20) ** 2 + (y - 12) ** 2 < 49
content[disc] = [230, 210, 90]
content[22:27, 4:18] = [20, 25, 30]
Image.fromarray(np.clip(content, 0, 255).astype(np.uint8), "RGB").save("content.png")

# Style: diagonal colour stripes with noise.
phase = ((x + y) // 4) % 3
palette = np.array([[200, 40, 60], [30, 90, 200], [250, 200, 40]], dtype=np.float64)
style = palette[phase] + rng.normal(0, 18, size=(32, 32, 3))
Image.fromarray(np.clip(style, 0, 255).astype(np.uint8), "RGB").save("style.png")

# Style of a different size for the quantile path.
y2, x2 = np.mgrid[0:24, 0:40]
style_wide = palette[((x2 - y2) // 5) % 3] + rng.normal(0, 12, size=(24, 40, 3))
Image.fromarray(np.clip(style_wide, 0, 255).astype(np.uint8), "RGB").save("style_wide.png")

# I/O fixtures.
Image.fromarray(np.array([[[255, 0, 0], [255, 0, 0]]], dtype=np.uint8), "RGB").save("red_2x1.png")
Image.fromarray(np.full((2, 3), 128, dtype=np.uint8), "L").save("gray128.png")
rgba = np.array([[[0, 0, 0, 0], [0, 0, 0, 255], [255, 0, 0, 128]]], dtype=np.uint8)
Image.fromarray(rgba, "RGBA").save("rgba_3x1.png")
Image.fromarray(np.clip(content, 0, 255).astype(np.uint8), "RGB").save("content.jpg", quality=95)
with open("corrupt.png", "wb") as f:
    f.write(b"\x89PNG\r\n\x1a\n" + bytes(range(40)))
with open("not_an_image.txt", "wb") as f:
    f.write(b"hello\n")
