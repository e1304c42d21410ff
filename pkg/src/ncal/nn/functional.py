"""Differentiable building blocks composed from autodiff primitives.

Includes the bridge between the network and the camera model: an
orthogonalizing 6D-to-matrix expansion whose gradient comes from the
primitive chain rule, a fiducial-projection op whose backward pass uses the
analytic projection Jacobian, and the standalone 9x6 Jacobian of the
6D expansion used by the classical bundle-adjustment solver.
"""

from __future__ import annotations

import numpy as np

from .. import geometry
from ..errors import DegenerateRotation
from . import autodiff as ad
from .autodiff import Tensor


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map along the last axis: x @ weight + bias.

    Leading axes are flattened around one large matrix product, which is far
    faster than numpy's batched matmul of many small blocks.
    """
    shape = x.data.shape
    if x.data.ndim == 2:
        return x @ weight + bias
    flat = x.reshape((-1, shape[-1]))
    out = flat @ weight + bias
    return out.reshape(shape[:-1] + (weight.data.shape[-1],))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale-shift."""
    return ad.layer_norm(x, gain, bias, eps)


def rot6d_to_matrix_t(r6: Tensor) -> Tensor:
    """Differentiable Gram-Schmidt: (..., 6) -> (..., 9) row-major rotation.

    Matches geometry.rot6d_to_matrix elementwise; raises DegenerateRotation
    when any first column is near zero or the columns are near parallel.
    """
    a1 = r6[..., 0:3]
    a2 = r6[..., 3:6]
    n1sq = (a1 * a1).sum(axis=-1, keepdims=True)
    if np.any(n1sq.data <= geometry.GS_EPS**2):
        raise DegenerateRotation("first 6D column has near-zero norm")
    b1 = a1 / n1sq**0.5
    d = (b1 * a2).sum(axis=-1, keepdims=True)
    u2 = a2 - d * b1
    n2sq = (u2 * u2).sum(axis=-1, keepdims=True)
    if np.any(n2sq.data <= geometry.GS_EPS**2):
        raise DegenerateRotation("6D columns are near parallel")
    b2 = u2 / n2sq**0.5
    b3 = cross3_t(b1, b2)
    # Rows of the (3, 3) block are b1, b2, b3 == R^T; transpose to row-major R.
    cols = ad.concat([b1, b2, b3], axis=-1)
    batch = cols.data.shape[:-1]
    rt = cols.reshape(batch + (3, 3))
    ndim = len(batch) + 2
    r = rt.transpose(tuple(range(ndim - 2)) + (ndim - 1, ndim - 2))
    return r.reshape(batch + (9,))


def cross3_t(a: Tensor, b: Tensor) -> Tensor:
    """Cross product along the last axis (size 3)."""
    a0, a1, a2 = a[..., 0:1], a[..., 1:2], a[..., 2:3]
    b0, b1, b2 = b[..., 0:1], b[..., 1:2], b[..., 2:3]
    return ad.concat([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def geodesic_angles_t(pred_r9: Tensor, gt_r9) -> Tensor:
    """Per-camera rotation angle between predicted and target rotations.

    Both arguments are (..., 9) row-major matrices; the target is constant.
    Uses trace(R1^T R2) = sum of elementwise products.
    """
    gt = gt_r9 if isinstance(gt_r9, Tensor) else ad.constant(gt_r9)
    tr = (pred_r9 * gt).sum(axis=-1)
    return ad.acos((tr - 1.0) * 0.5)


def project_fiducials_t(params: Tensor, fiducials: np.ndarray):
    """Project fiducials through predicted cameras, differentiably.

    params: (..., 21) flattened camera parameters (Tensor).
    fiducials: (N_fid, 3) constant world points.

    Returns (pixels, valid): pixels is a (..., N_fid, 2) Tensor whose backward
    pass contracts the upstream gradient with the analytic projection
    Jacobian; valid is a constant bool array marking points in front of the
    camera. Gradients through invalid points are zeroed (their forward values
    are computed with clamped depth and should be masked by the caller).
    """
    fid = np.asarray(fiducials, dtype=np.float64)
    pix, valid = geometry.project_array(params.data, fid)
    params_data = params.data

    def backward(g):
        _, _, jac = geometry.project_jacobian_array(params_data, fid)
        # (..., F, 2, 21) contracted with upstream (..., F, 2) over (F, 2).
        params._accum(np.einsum("...fc,...fcp->...p", g * valid[..., None], jac))

    out = ad.Tensor(
        pix,
        requires_grad=params.requires_grad,
        parents=(params,),
        backward=backward if params.requires_grad else None,
    )
    return out, valid


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def rot6d_jacobian(r6) -> np.ndarray:
    """Analytic 9x6 Jacobian of the 6D-to-matrix expansion (row-major output).

    Rows index the 9 matrix entries in row-major order; columns index the
    6D vector. Used to chain the projection Jacobian onto 6D rotation
    parameters in the bundle-adjustment solver.
    """
    r6 = np.asarray(r6, dtype=float).reshape(6)
    a1, a2 = r6[:3], r6[3:]
    n1 = np.linalg.norm(a1)
    if n1 <= geometry.GS_EPS:
        raise DegenerateRotation("first 6D column has near-zero norm")
    b1 = a1 / n1
    I = np.eye(3)
    db1_da1 = (I - np.outer(b1, b1)) / n1
    d = b1 @ a2
    u2 = a2 - d * b1
    n2 = np.linalg.norm(u2)
    if n2 <= geometry.GS_EPS:
        raise DegenerateRotation("6D columns are near parallel")
    b2 = u2 / n2
    du2_db1 = -np.outer(b1, a2) - d * I
    du2_da1 = du2_db1 @ db1_da1
    du2_da2 = I - np.outer(b1, b1)
    db2_du2 = (I - np.outer(b2, b2)) / n2
    db2_da1 = db2_du2 @ du2_da1
    db2_da2 = db2_du2 @ du2_da2
    db3_da1 = -_skew(b2) @ db1_da1 + _skew(b1) @ db2_da1
    db3_da2 = _skew(b1) @ db2_da2

    jac = np.zeros((9, 6))
    cols = (
        (db1_da1, np.zeros((3, 3))),
        (db2_da1, db2_da2),
        (db3_da1, db3_da2),
    )
    for j, (da1, da2_) in enumerate(cols):
        for i in range(3):
            jac[3 * i + j, 0:3] = da1[i]
            jac[3 * i + j, 3:6] = da2_[i]
    return jac
