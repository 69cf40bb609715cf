//! Forward kinematics and analytic Jacobians.
//!
//! One `KinCache` per configuration holds every quantity the dynamics needs:
//! joint origins and link-frame angles, per-joint origin Jacobians, and
//! per-link center-of-mass Jacobians. Columns are assembled from the
//! coordinate table on the model:
//!
//! - world translations contribute constant unit columns,
//! - fixed-joint local translations contribute the parent frame's rotated
//!   axis directions,
//! - rotations contribute `perp(p - o_j)` where `o_j` is the owning joint's
//!   origin.
//!
//! The same structure yields the analytic partial `d(column)/d(theta_k)` used
//! by the mass-matrix derivatives: translation columns differentiate to their
//! own perp when `k` rotates the carrying frame, and rotation columns
//! differentiate to `perp(dp/dk - do_j/dk)`, both of which are already
//! available from the cached Jacobians.

use nalgebra::{DMatrix, DVector, Matrix2xX, Vector2};

use crate::error::SimResult;
use crate::multibody::model::{perp, rot2, CoordKind, FrameId, JointKind, Pose, RobotModel};

/// Kinematic quantities for one configuration.
pub struct KinCache<'m> {
    pub model: &'m RobotModel,
    /// World origin of each joint.
    pub origins: Vec<Vector2<f64>>,
    /// World angle of each joint's link frame (mount included).
    pub angles: Vec<f64>,
    /// 2 x eta origin Jacobian of each joint.
    pub origin_jac: Vec<Matrix2xX<f64>>,
    /// World position of each link's center of mass.
    pub coms: Vec<Vector2<f64>>,
    /// 2 x eta center-of-mass Jacobian of each link.
    pub com_jac: Vec<Matrix2xX<f64>>,
}

impl<'m> KinCache<'m> {
    pub fn new(model: &'m RobotModel, theta: &DVector<f64>) -> KinCache<'m> {
        debug_assert_eq!(theta.len(), model.dof());
        let nj = model.joints().len();
        let mut origins = Vec::with_capacity(nj);
        let mut angles = Vec::with_capacity(nj);

        for (j, joint) in model.joints().iter().enumerate() {
            let q0 = model.joint_coord(j);
            match joint.parent {
                None => {
                    origins.push(Vector2::new(theta[q0], theta[q0 + 1]));
                    angles.push(theta[q0 + 2] + joint.mount);
                }
                Some(p) => {
                    let anchor =
                        origins[p] + rot2(angles[p]) * Vector2::new(0.0, -joint.anchor);
                    match joint.kind {
                        JointKind::Revolute => {
                            origins.push(anchor);
                            angles.push(angles[p] + theta[q0] + joint.mount);
                        }
                        JointKind::Fixed3 => {
                            let local = Vector2::new(theta[q0], theta[q0 + 1]);
                            origins.push(anchor + rot2(angles[p]) * local);
                            angles.push(angles[p] + theta[q0 + 2] + joint.mount);
                        }
                        JointKind::PlanarBase => unreachable!("base is root only"),
                    }
                }
            }
        }

        // Origin Jacobians. Column k of joint j's origin Jacobian: coordinate
        // k moves o_j only if k lies on j's path AND k is not j's own
        // rotation (a joint's own rotation pivots about its own origin).
        // A fixed joint's own local translations DO move its origin.
        let mut cache = KinCache {
            model,
            origins,
            angles,
            origin_jac: Vec::with_capacity(nj),
            coms: Vec::with_capacity(nj),
            com_jac: Vec::with_capacity(nj),
        };
        for j in 0..nj {
            let jac = cache.point_jacobian_raw(j, cache.origins[j], Some(j));
            cache.origin_jac.push(jac);
        }
        for (j, joint) in model.joints().iter().enumerate() {
            let com =
                cache.origins[j] + rot2(cache.angles[j]) * Vector2::new(0.0, -joint.link.com_offset);
            cache.coms.push(com);
            let jac = cache.point_jacobian_raw(j, com, None);
            cache.com_jac.push(jac);
        }
        cache
    }

    /// Jacobian of a world point rigidly attached to `joint`'s link.
    /// `skip_own_rot`: when computing a joint ORIGIN's Jacobian, that joint's
    /// own rotation coordinate does not move the point.
    fn point_jacobian_raw(
        &self,
        joint: usize,
        point: Vector2<f64>,
        origin_of: Option<usize>,
    ) -> Matrix2xX<f64> {
        let model = self.model;
        let eta = model.dof();
        let mut jac = Matrix2xX::zeros(eta);
        let mask = model.path_mask_of(joint);
        for (k, info) in model.coord_infos().iter().enumerate() {
            if mask & (1 << k) == 0 {
                continue;
            }
            let col = match info.kind {
                CoordKind::WorldX => Vector2::new(1.0, 0.0),
                CoordKind::WorldZ => Vector2::new(0.0, 1.0),
                CoordKind::LocalX | CoordKind::LocalZ => {
                    // Local axis of the fixed joint's parent frame. If we are
                    // computing the origin Jacobian of that very fixed joint,
                    // its own local translations still move the origin.
                    let p = model.joints()[info.joint]
                        .parent
                        .expect("fixed joint has a parent");
                    let axis = if info.kind == CoordKind::LocalX {
                        Vector2::new(1.0, 0.0)
                    } else {
                        Vector2::new(0.0, 1.0)
                    };
                    rot2(self.angles[p]) * axis
                }
                CoordKind::Rot => {
                    if origin_of == Some(info.joint) {
                        continue; // own rotation pivots about this origin
                    }
                    perp(point - self.origins[info.joint])
                }
            };
            jac.set_column(k, &col);
        }
        jac
    }

    /// Jacobian of an arbitrary point attached to `joint`'s link.
    pub fn point_jacobian(&self, joint: usize, point: Vector2<f64>) -> Matrix2xX<f64> {
        self.point_jacobian_raw(joint, point, None)
    }

    /// World pose of a registered frame.
    pub fn frame_pose(&self, id: FrameId) -> Pose {
        let def = self.model.frame_def(id);
        let p = self.origins[def.joint]
            + rot2(self.angles[def.joint]) * Vector2::new(0.0, -def.offset);
        Pose {
            x: p.x,
            z: p.y,
            phi: self.angles[def.joint] + def.rel_rot,
        }
    }

    /// 3 x eta frame Jacobian: rows are d(x, z, phi)/d(theta).
    pub fn frame_jacobian(&self, id: FrameId) -> DMatrix<f64> {
        let def = self.model.frame_def(id);
        let model = self.model;
        let eta = model.dof();
        let p = self.origins[def.joint]
            + rot2(self.angles[def.joint]) * Vector2::new(0.0, -def.offset);
        let jv = self.point_jacobian(def.joint, p);
        let mut jac = DMatrix::zeros(3, eta);
        jac.row_mut(0).copy_from(&jv.row(0));
        jac.row_mut(1).copy_from(&jv.row(1));
        let mask = model.path_mask_of(def.joint);
        for (k, info) in model.coord_infos().iter().enumerate() {
            if mask & (1 << k) != 0 && info.kind == CoordKind::Rot {
                jac[(2, k)] = 1.0;
            }
        }
        jac
    }

    /// World velocity (x_dot, z_dot, phi_dot) of a frame.
    pub fn frame_velocity(&self, id: FrameId, theta_dot: &DVector<f64>) -> DVector<f64> {
        &self.frame_jacobian(id) * theta_dot
    }

    /// Time derivative of the frame Jacobian contracted with theta_dot:
    /// `Jdot(theta, theta_dot) * theta_dot`, analytic.
    ///
    /// Position rows: d/dt of a rotation column `perp(p - o_j)` is
    /// `perp(p_dot - o_j_dot)`; d/dt of a local-axis column is
    /// `omega_parent * perp(axis_world)`. The phi row is constant.
    pub fn frame_jac_dot_qdot(&self, id: FrameId, theta_dot: &DVector<f64>) -> DVector<f64> {
        let def = self.model.frame_def(id);
        let model = self.model;
        let p = self.origins[def.joint]
            + rot2(self.angles[def.joint]) * Vector2::new(0.0, -def.offset);
        let jp = self.point_jacobian(def.joint, p);
        let p_dot = &jp * theta_dot;
        let mask = model.path_mask_of(def.joint);
        let mut out = Vector2::zeros();
        for (k, info) in model.coord_infos().iter().enumerate() {
            if mask & (1 << k) == 0 {
                continue;
            }
            let col_dot = match info.kind {
                CoordKind::WorldX | CoordKind::WorldZ => Vector2::zeros(),
                CoordKind::LocalX | CoordKind::LocalZ => {
                    let parent = model.joints()[info.joint].parent.unwrap();
                    let axis = if info.kind == CoordKind::LocalX {
                        Vector2::new(1.0, 0.0)
                    } else {
                        Vector2::new(0.0, 1.0)
                    };
                    let omega = self.frame_angle_rate(parent, theta_dot);
                    perp(rot2(self.angles[parent]) * axis) * omega
                }
                CoordKind::Rot => {
                    let o_dot = &self.origin_jac[info.joint] * theta_dot;
                    perp(Vector2::new(p_dot[0] - o_dot[0], p_dot[1] - o_dot[1]))
                }
            };
            out += col_dot * theta_dot[k];
        }
        DVector::from_vec(vec![out.x, out.y, 0.0])
    }

    /// Angular rate of a joint's link frame: sum of rotational coordinate
    /// rates on its path.
    pub fn frame_angle_rate(&self, joint: usize, theta_dot: &DVector<f64>) -> f64 {
        let model = self.model;
        let mask = model.path_mask_of(joint);
        let mut omega = 0.0;
        for (k, info) in model.coord_infos().iter().enumerate() {
            if mask & (1 << k) != 0 && info.kind == CoordKind::Rot {
                omega += theta_dot[k];
            }
        }
        omega
    }

    /// Analytic partial of link `i`'s COM Jacobian with respect to theta_k.
    pub(crate) fn com_jacobian_partial(&self, link: usize, k: usize) -> Matrix2xX<f64> {
        let model = self.model;
        let eta = model.dof();
        let mut out = Matrix2xX::zeros(eta);
        let mask = model.path_mask_of(link);
        if mask & (1 << k) == 0 {
            // Coordinate k does not move this link at all, so the whole
            // Jacobian is locally independent of it only when k also fails to
            // move the pivot origins of columns on the path; but any such
            // origin lies on the path too, hence also unmoved. Partial = 0.
            return out;
        }
        let jc = &self.com_jac[link];
        for (j, info) in model.coord_infos().iter().enumerate() {
            if mask & (1 << j) == 0 {
                continue;
            }
            let dcol = match info.kind {
                CoordKind::WorldX | CoordKind::WorldZ => Vector2::zeros(),
                CoordKind::LocalX | CoordKind::LocalZ => {
                    // Column = parent-frame axis; rotates iff k rotates the
                    // parent frame of the owning fixed joint.
                    if model.parent_rot_mask_of(info.joint) & (1 << k) != 0 {
                        let col = Vector2::new(jc[(0, j)], jc[(1, j)]);
                        perp(col)
                    } else {
                        Vector2::zeros()
                    }
                }
                CoordKind::Rot => {
                    let dj_p = Vector2::new(jc[(0, k)], jc[(1, k)]);
                    let jo = &self.origin_jac[info.joint];
                    let dj_o = Vector2::new(jo[(0, k)], jo[(1, k)]);
                    perp(dj_p - dj_o)
                }
            };
            out.set_column(j, &dcol);
        }
        out
    }
}

/// World pose of a named frame at configuration `theta`.
pub fn forward_kinematics(
    model: &RobotModel,
    theta: &DVector<f64>,
    frame: FrameId,
) -> SimResult<Pose> {
    if theta.len() != model.dof() {
        return Err(crate::error::SimError::DimensionMismatch {
            what: "theta",
            expected: model.dof(),
            got: theta.len(),
        });
    }
    Ok(KinCache::new(model, theta).frame_pose(frame))
}

/// 3 x eta Jacobian of a named frame's pose at `theta`.
pub fn frame_jacobian(
    model: &RobotModel,
    theta: &DVector<f64>,
    frame: FrameId,
) -> SimResult<DMatrix<f64>> {
    if theta.len() != model.dof() {
        return Err(crate::error::SimError::DimensionMismatch {
            what: "theta",
            expected: model.dof(),
            got: theta.len(),
        });
    }
    Ok(KinCache::new(model, theta).frame_jacobian(frame))
}
