"""NumPy implementations of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def p1_triplets(points, elements):
    points = np.asarray(points, dtype=np.float64)
    elements = np.asarray(elements, dtype=np.int64)
    dim = points.shape[1]
    nv = elements.shape[1]
    if dim != nv - 1 or dim not in (1, 2):
        raise ValueError("elements must be segments in 1D or triangles in 2D")
    eye = np.eye(nv)
    if dim == 1:
        h = np.abs(points[elements[:, 1], 0] - points[elements[:, 0], 0])
        if np.any(h <= 0.0):
            raise ValueError("degenerate element")
        sign = 2.0 * eye - 1.0
        kloc = sign[None] / h[:, None, None]
        mloc = h[:, None, None] * (1.0 + eye)[None] / 6.0
    else:
        p = points[elements]  # (E, 3, 2)
        x, y = p[..., 0], p[..., 1]
        det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
        if np.any(det <= 0.0):
            raise ValueError("element with non-positive orientation")
        gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1) / det[:, None]
        gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1) / det[:, None]
        area = 0.5 * det
        kloc = area[:, None, None] * (gx[:, :, None] * gx[:, None, :] + gy[:, :, None] * gy[:, None, :])
        mloc = area[:, None, None] * (1.0 + eye)[None] / 12.0
    rows = np.repeat(elements, nv, axis=1).ravel()
    cols = np.tile(elements, (1, nv)).ravel()
    return rows, cols, kloc.ravel(), mloc.ravel()


def slobodetskii_weights(px, py, lengths, exponent):
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    lengths = np.asarray(lengths, dtype=np.float64)
    r2 = (px[:, None] - px[None, :]) ** 2 + (py[:, None] - py[None, :]) ** 2
    np.fill_diagonal(r2, 1.0)
    w = np.outer(lengths, lengths) / r2 ** (0.5 * exponent)
    np.fill_diagonal(w, 0.0)
    return w
