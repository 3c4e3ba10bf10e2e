"""Overlay detections on RGB images.

Colors are fixed: face box red, eyes green, nose blue, mouth yellow.  The
box is a 3-pixel band just inside the face bounding box; landmarks get a
9x9 one-pixel crosshair.
"""

import numpy as np

from .imaging import as_rgb

BOX_COLOR = (255, 0, 0)
LANDMARK_COLORS = {
    "eye_left": (0, 255, 0),
    "eye_right": (0, 255, 0),
    "nose_tip": (0, 0, 255),
    "mouth_center": (255, 255, 0),
}
BOX_THICKNESS = 3
CROSS_HALF = 4


def draw_box(img, bbox, color=BOX_COLOR, thickness=BOX_THICKNESS):
    min_x, min_y, max_x, max_y = bbox
    t = thickness
    img[min_y:min_y + t, min_x:max_x + 1] = color
    img[max(max_y - t + 1, min_y):max_y + 1, min_x:max_x + 1] = color
    img[min_y:max_y + 1, min_x:min_x + t] = color
    img[min_y:max_y + 1, max(max_x - t + 1, min_x):max_x + 1] = color


def draw_cross(img, point, color, half=CROSS_HALF):
    h, w = img.shape[:2]
    x, y = int(np.floor(point[0] + 0.5)), int(np.floor(point[1] + 0.5))
    if 0 <= y < h:
        img[y, max(x - half, 0):min(x + half + 1, w)] = color
    if 0 <= x < w:
        img[max(y - half, 0):min(y + half + 1, h), x] = color


def annotate(img, detections):
    out = as_rgb(img).copy()
    for det in detections:
        draw_box(out, det.face_bbox.bbox)
    for det in detections:
        for name, pt in (det.landmarks or {}).items():
            draw_cross(out, pt, LANDMARK_COLORS[name])
    return out
