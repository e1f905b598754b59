"""Polygonal inner/outer approximations of 2-D unit balls."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spaces import boundary_point_2d


def polar_of_polygon(points):
    """Vertices of the polar of conv(points); points are a convex CCW loop."""
    edges = np.roll(points, -1, axis=0) - points
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
    offsets = np.einsum("ij,ij->i", normals, points)
    scale = np.max(np.abs(points))
    keep = (np.max(np.abs(edges), axis=1) > 1e-14 * scale) & (offsets > 0)
    return normals[keep] / offsets[keep, None]


@dataclass(frozen=True)
class BallPolygons:
    """Sampled unit ball of a 2-D norm.

    ``inner`` lies on the unit sphere, ``normals`` on the dual unit sphere
    (one norming functional per inner point). ``outer`` are the vertices of
    the polar of conv(normals), a polygon containing the ball; ``dual_outer``
    are the vertices of the polar of conv(inner), a polygon containing the
    dual ball. Both containments hold for any sampling density.
    """

    inner: np.ndarray
    normals: np.ndarray
    outer: np.ndarray
    dual_outer: np.ndarray
    exact: bool = False


def sample_ball(norm2d, count: int) -> BallPolygons:
    theta = 2.0 * np.pi * np.arange(count) / count
    inner = boundary_point_2d(norm2d, theta)
    normals = norm2d.subgradient(inner)
    return BallPolygons(inner, normals, polar_of_polygon(normals), polar_of_polygon(inner))


def exact_ball(vertices, polar) -> BallPolygons:
    return BallPolygons(vertices, polar, vertices, polar, exact=True)
