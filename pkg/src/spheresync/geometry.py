"""Geometry on the unit sphere: duals, Gram invariants, alignment, Hopf map.

Configurations are plain float arrays of shape (N, d) whose rows are unit
vectors.  Nothing here depends on the interaction kernels; the determinant
based ``hodge_dual`` is deliberately kept independent of the wedge-table
machinery so the two can check each other.
"""

from __future__ import annotations

import numpy as np

UNIT_TOL = 1e-9
BALANCED_TOL = 1e-12
_SERIES_CUTOFF = 1e-4


def as_configuration(arr, d: int | None = None) -> np.ndarray:
    """Validate and return a configuration array of shape (N, d).

    Rows must be unit vectors within ``UNIT_TOL`` and N must be at least d
    so that d-fold index tuples without repetition exist.
    """
    x = np.ascontiguousarray(arr, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"configuration must be 2-d, got shape {x.shape}")
    n, dim = x.shape
    if d is not None and dim != d:
        raise ValueError(f"expected ambient dimension {d}, got {dim}")
    if dim < 2:
        raise ValueError(f"ambient dimension must be at least 2, got {dim}")
    if n < dim:
        raise ValueError(f"need at least d={dim} nodes, got N={n}")
    norms = np.linalg.norm(x, axis=1)
    worst = np.max(np.abs(norms - 1.0))
    if worst > UNIT_TOL:
        raise ValueError(f"rows are not unit vectors (max deviation {worst:.3e})")
    return x


def renormalize(x: np.ndarray) -> np.ndarray:
    """Scale each row back onto the sphere."""
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def random_unit_configuration(d: int, n: int, seed) -> np.ndarray:
    """Draw N independent uniform points on S^{d-1}.

    Normalized Gaussian draws from ``numpy.random.default_rng`` (PCG64), so
    runs are reproducible from the seed alone.
    """
    if d < 2:
        raise ValueError(f"ambient dimension must be at least 2, got {d}")
    if n < d:
        raise ValueError(f"need at least d={d} nodes, got N={n}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    return renormalize(x)


def hodge_dual_batch(vectors: np.ndarray) -> np.ndarray:
    """Duals for a batch of (d-1)-tuples, shape (B, d-1, d) -> (B, d).

    Component m of each dual is the signed minor obtained by deleting row m
    from the d x (d-1) matrix whose columns are the tuple vectors, i.e. the
    cofactor expansion of det(u, v_1, .., v_{d-1}) along u.
    """
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 3 or v.shape[1] + 1 != v.shape[2]:
        raise ValueError(f"expected shape (B, d-1, d), got {v.shape}")
    d = v.shape[2]
    cols = np.swapaxes(v, 1, 2)  # (B, d, d-1), tuple vectors as columns
    out = np.empty((v.shape[0], d))
    keep = np.arange(d)
    for m in range(d):
        minor = cols[:, keep != m, :]
        if d == 2:
            det = minor[:, 0, 0]
        else:
            det = np.linalg.det(minor)
        out[:, m] = det if m % 2 == 0 else -det
    return out


def hodge_dual(vectors) -> np.ndarray:
    """Dual vector v of d-1 input vectors, defined by u.v = det(u, v_1, ..).

    For d = 3 this is the cross product; for d = 2 it rotates (x, y) to
    (y, -x).  Linearly dependent inputs give the zero vector.
    """
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2:
        raise ValueError(f"expected a stack of vectors, got shape {v.shape}")
    k, d = v.shape
    if k + 1 != d:
        raise ValueError(f"need d-1={d - 1} vectors of length d={d}, got {k}")
    if d == 2:
        return np.array([v[0, 1], -v[0, 0]])
    if d == 3:
        return np.cross(v[0], v[1])
    return hodge_dual_batch(v[None])[0]


def gram_invariants(config, triples: bool = False):
    """Pairwise dot products x_i . x_j, the rotation invariants of a state.

    With ``triples=True`` (d = 3 only) also returns the antisymmetric tensor
    of triple products x_i . (x_j x x_k).
    """
    x = np.asarray(config, dtype=float)
    gram = x @ x.T
    if not triples:
        return gram
    return gram, triple_products(x)


def triple_products(config) -> np.ndarray:
    """Full tensor of signed volumes x_i . (x_j x x_k) for a d=3 state."""
    x = np.asarray(config, dtype=float)
    if x.shape[1] != 3:
        raise ValueError("triple products are defined for d=3 configurations")
    crosses = np.cross(x[:, None, :], x[None, :, :])
    return np.einsum("id,jkd->ijk", x, crosses)


# -- alignment along the mean direction ------------------------------------
#
# The generator is an antisymmetric matrix whose only nonzero entries couple
# the last axis to the transverse ones.  Its cube is -|w|^2 times itself, so
# the exponential truncates after the quadratic term.


def generator_matrix(omega) -> np.ndarray:
    """Antisymmetric generator with transverse block omega in the last column."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    d = w.size + 1
    gen = np.zeros((d, d))
    gen[:-1, -1] = w
    gen[-1, :-1] = -w
    return gen


def _sin_over(z: float) -> float:
    if abs(z) < _SERIES_CUTOFF:
        z2 = z * z
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    return np.sin(z) / z


def _versine_over(z: float) -> float:
    if abs(z) < _SERIES_CUTOFF:
        z2 = z * z
        return 0.5 - z2 / 24.0 + z2 * z2 / 720.0
    return (1.0 - np.cos(z)) / (z * z)


def generator_exp(omega, t: float = 1.0) -> np.ndarray:
    """exp(t * generator) via I + b(t) G + c(t) G^2.

    b(t) = sin(|w| t)/|w| and c(t) = (1 - cos(|w| t))/|w|^2, switching to
    series below a cutoff so the t -> 0 and |w| -> 0 limits stay smooth.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    gen = generator_matrix(w)
    angle = float(np.linalg.norm(w))
    z = angle * t
    b = t * _sin_over(z)
    c = t * t * _versine_over(z)
    return np.eye(w.size + 1) + b * gen + c * (gen @ gen)


def alignment_generator(direction) -> np.ndarray:
    """Transverse rotation vector w with exp(generator(w)) . e_last = direction."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    angle = float(np.arccos(np.clip(n[-1], -1.0, 1.0)))
    transverse = n[:-1]
    tnorm = float(np.linalg.norm(transverse))
    if tnorm < 1e-13:
        w = np.zeros(n.size - 1)
        if n[-1] < 0.0:
            # Antipodal to the pole: any half-turn works, pick the first axis.
            w[0] = np.pi
        return w
    return (angle / tnorm) * transverse


def rotation_to_last_axis(direction) -> np.ndarray:
    """Rotation R with R . direction parallel to (0, .., 0, 1)."""
    return generator_exp(alignment_generator(direction), t=-1.0)


def _rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rotation in span(a, b) taking unit vector a to unit vector b."""
    dim = a.size
    c = float(a @ b)
    if c < -1.0 + 1e-12:
        # b is antipodal to a: compose two reflections for a proper half turn.
        k = int(np.argmin(np.abs(a)))
        p = -a[k] * a
        p[k] += 1.0
        p /= np.linalg.norm(p)
        return (np.eye(dim) - 2.0 * np.outer(p, p)) @ (np.eye(dim) - 2.0 * np.outer(a, a))
    s = a + b
    return np.eye(dim) - np.outer(s, s) / (1.0 + c) + 2.0 * np.outer(b, a)


def align_to_axis(config, canonicalize: bool = False):
    """Rotate a configuration so its mean points along the last axis.

    Returns ``(rotation, rotated)``.  With ``canonicalize=True`` the residual
    freedom about the axis is fixed by turning the last node's transverse
    part onto the positive first axis (a convention, nothing more).
    Balanced states, where the mean is numerically zero, are rejected.
    """
    x = as_configuration(config)
    n, d = x.shape
    mean = x.mean(axis=0)
    if np.linalg.norm(mean) < BALANCED_TOL:
        raise ValueError("balanced configuration: mean direction is undefined")
    rot = rotation_to_last_axis(mean)
    aligned = x @ rot.T
    if canonicalize and d >= 3:
        transverse = aligned[n - 1, :-1]
        tnorm = np.linalg.norm(transverse)
        if tnorm > 1e-12:
            first = np.zeros(d - 1)
            first[0] = 1.0
            block = _rotation_between(transverse / tnorm, first)
            extra = np.eye(d)
            extra[:-1, :-1] = block
            rot = extra @ rot
            aligned = x @ rot.T
    return rot, aligned


def best_rotation_onto(config, target) -> tuple[np.ndarray, np.ndarray]:
    """Proper rotation minimizing sum |R x_i - y_i|^2 (orthogonal Procrustes).

    Returns ``(rotation, rotated)``.  Used to move a simulated state into the
    frame of a cataloged one before frame-dependent checks.
    """
    x = np.asarray(config, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    u, _, vt = np.linalg.svd(y.T @ x)
    flip = np.ones(x.shape[1])
    flip[-1] = np.sign(np.linalg.det(u @ vt))
    rot = (u * flip) @ vt
    return rot, x @ rot.T


def hopf_map(state) -> np.ndarray:
    """Project S^3 points (x, y, z, w) to S^2 via the Hopf fibration.

    Accepts a single 4-vector or an (N, 4) stack; unit inputs map to unit
    outputs.  The fibration is not rotation equivariant, so apply it only in
    a deliberately chosen frame.
    """
    v = np.asarray(state, dtype=float)
    single = v.ndim == 1
    v = np.atleast_2d(v)
    if v.shape[1] != 4:
        raise ValueError(f"the Hopf map needs 4 components, got {v.shape[1]}")
    x, y, z, w = v.T
    image = np.stack(
        [
            2.0 * (x * z - y * w),
            2.0 * (x * w + y * z),
            x * x + y * y - z * z - w * w,
        ],
        axis=1,
    )
    return image[0] if single else image
