//! Numerical oracles for the multibody layer.
//!
//! Everything analytic is checked against an independent path: Jacobians and
//! their drift terms against central finite differences of pure forward
//! kinematics, the mass matrix against kinetic energy computed from
//! finite-difference link velocities, multipliers against hand statics, and
//! the substitution-form constrained dynamics against a KKT solve.

use nalgebra::{DMatrix, DVector, Vector2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sepsim::multibody::constraint::{
    constrained_dynamics, forward_dynamics, forward_dynamics_kkt, project_state, Constraint,
    ConstraintSet,
};
use sepsim::multibody::dynamics::DynTerms;
use sepsim::multibody::kinematics::KinCache;
use sepsim::multibody::model::{FrameDef, Joint, JointKind, LinkParams, Pose, RobotModel};

fn link(mass: f64, length: f64, com: f64, inertia: f64) -> LinkParams {
    LinkParams {
        mass,
        length,
        com_offset: com,
        inertia,
    }
}

/// Serial chain: planar base carrying two geared revolute joints, nonzero
/// mounts so no geometry degenerates to axis-aligned.
fn chain_model() -> RobotModel {
    let joints = vec![
        Joint {
            name: "base".into(),
            kind: JointKind::PlanarBase,
            parent: None,
            anchor: 0.0,
            mount: std::f64::consts::PI,
            link: link(3.0, 0.5, 0.25, 0.02),
            actuation: None,
        },
        Joint {
            name: "shoulder".into(),
            kind: JointKind::Revolute,
            parent: Some(0),
            anchor: 0.4,
            mount: 0.3,
            link: link(1.5, 0.4, 0.18, 0.01),
            actuation: Some(1.0),
        },
        Joint {
            name: "elbow".into(),
            kind: JointKind::Revolute,
            parent: Some(1),
            anchor: 0.4,
            mount: -0.2,
            link: link(0.8, 0.3, 0.12, 0.005),
            actuation: Some(2.0),
        },
    ];
    let frames = vec![FrameDef {
        name: "tip".into(),
        joint: 2,
        offset: 0.3,
        rel_rot: 0.2,
    }];
    RobotModel::new(joints, frames, 9.81).unwrap()
}

/// Branched tree containing a passive three-coordinate fixed joint, the same
/// shape the walker's socket uses.
fn branched_model() -> RobotModel {
    let joints = vec![
        Joint {
            name: "base".into(),
            kind: JointKind::PlanarBase,
            parent: None,
            anchor: 0.0,
            mount: 0.0,
            link: link(2.0, 0.4, 0.2, 0.02),
            actuation: None,
        },
        Joint {
            name: "hip_l".into(),
            kind: JointKind::Revolute,
            parent: Some(0),
            anchor: 0.4,
            mount: 0.1,
            link: link(1.2, 0.35, 0.15, 0.01),
            actuation: Some(1.0),
        },
        Joint {
            name: "hip_r".into(),
            kind: JointKind::Revolute,
            parent: Some(0),
            anchor: 0.4,
            mount: -0.1,
            link: link(1.2, 0.35, 0.15, 0.01),
            actuation: Some(1.0),
        },
        Joint {
            name: "sock".into(),
            kind: JointKind::Fixed3,
            parent: Some(2),
            anchor: 0.35,
            mount: 0.0,
            link: link(0.9, 0.3, 0.14, 0.008),
            actuation: None,
        },
        Joint {
            name: "knee".into(),
            kind: JointKind::Revolute,
            parent: Some(3),
            anchor: 0.3,
            mount: 0.0,
            link: link(0.6, 0.25, 0.1, 0.004),
            actuation: Some(1.0),
        },
    ];
    let frames = vec![
        FrameDef {
            name: "sock_anchor".into(),
            joint: 2,
            offset: 0.35,
            rel_rot: 0.0,
        },
        FrameDef {
            name: "foot".into(),
            joint: 4,
            offset: 0.25,
            rel_rot: 0.0,
        },
    ];
    RobotModel::new(joints, frames, 9.81).unwrap()
}

fn rand_state(rng: &mut ChaCha8Rng, eta: usize) -> (DVector<f64>, DVector<f64>) {
    let theta = DVector::from_fn(eta, |_, _| rng.gen_range(-1.0..1.0));
    let theta_dot = DVector::from_fn(eta, |_, _| rng.gen_range(-2.0..2.0));
    (theta, theta_dot)
}

fn scaled(a: f64, reference: f64) -> f64 {
    a / (1.0 + reference)
}

#[test]
fn zero_pose_hangs_straight_down() {
    // No mounts: every link along -z, so joint k sits at minus the summed
    // anchor lengths.
    let joints = vec![
        Joint {
            name: "base".into(),
            kind: JointKind::PlanarBase,
            parent: None,
            anchor: 0.0,
            mount: 0.0,
            link: link(1.0, 0.5, 0.25, 0.01),
            actuation: None,
        },
        Joint {
            name: "j1".into(),
            kind: JointKind::Revolute,
            parent: Some(0),
            anchor: 0.5,
            mount: 0.0,
            link: link(1.0, 0.4, 0.2, 0.01),
            actuation: Some(1.0),
        },
        Joint {
            name: "j2".into(),
            kind: JointKind::Revolute,
            parent: Some(1),
            anchor: 0.4,
            mount: 0.0,
            link: link(1.0, 0.3, 0.15, 0.01),
            actuation: Some(1.0),
        },
    ];
    let frames = vec![FrameDef {
        name: "tip".into(),
        joint: 2,
        offset: 0.3,
        rel_rot: 0.0,
    }];
    let model = RobotModel::new(joints, frames, 9.81).unwrap();
    let theta = DVector::zeros(model.dof());
    let kin = KinCache::new(&model, &theta);

    let p1 = kin.frame_pose(model.frame("j1").unwrap());
    assert!((p1.x - 0.0).abs() < 1e-15 && (p1.z + 0.5).abs() < 1e-15);
    let p2 = kin.frame_pose(model.frame("j2").unwrap());
    assert!((p2.x - 0.0).abs() < 1e-15 && (p2.z + 0.9).abs() < 1e-15);
    let tip = kin.frame_pose(model.frame("tip").unwrap());
    assert!((tip.x - 0.0).abs() < 1e-15 && (tip.z + 1.2).abs() < 1e-15);
    assert!(tip.phi.abs() < 1e-15);
}

#[test]
fn base_translation_and_rotation_compose() {
    let model = chain_model();
    let mut theta = DVector::zeros(model.dof());
    theta[0] = 1.0;
    theta[1] = 2.0;
    theta[2] = 0.3;
    let kin = KinCache::new(&model, &theta);

    // Torso mount of pi flips the link axis up: shoulder anchor at
    // base + R(0.3 + pi) * (0, -0.4).
    let w0 = 0.3 + std::f64::consts::PI;
    let expect = Vector2::new(1.0, 2.0)
        + nalgebra::Matrix2::new(w0.cos(), -w0.sin(), w0.sin(), w0.cos())
            * Vector2::new(0.0, -0.4);
    let p = kin.frame_pose(model.frame("shoulder").unwrap());
    assert!((p.x - expect.x).abs() < 1e-14);
    assert!((p.z - expect.y).abs() < 1e-14);
    assert!((p.phi - (w0 + 0.3)).abs() < 1e-14);
}

#[test]
fn frame_jacobians_match_finite_differences() {
    for model in [chain_model(), branched_model()] {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let eta = model.dof();
        for _ in 0..10 {
            let (theta, _) = rand_state(&mut rng, eta);
            let kin = KinCache::new(&model, &theta);
            for fid in 0..model.frames().len() {
                let id = sepsim::multibody::model::FrameId(fid);
                let jac = kin.frame_jacobian(id);
                let h = 1e-6;
                for k in 0..eta {
                    let mut tp = theta.clone();
                    let mut tm = theta.clone();
                    tp[k] += h;
                    tm[k] -= h;
                    let pp = KinCache::new(&model, &tp).frame_pose(id);
                    let pm = KinCache::new(&model, &tm).frame_pose(id);
                    let fd = [
                        (pp.x - pm.x) / (2.0 * h),
                        (pp.z - pm.z) / (2.0 * h),
                        (pp.phi - pm.phi) / (2.0 * h),
                    ];
                    for r in 0..3 {
                        let err = scaled((jac[(r, k)] - fd[r]).abs(), jac[(r, k)].abs());
                        assert!(
                            err < 1e-7,
                            "frame {fid} row {r} col {k}: analytic {} vs fd {}",
                            jac[(r, k)],
                            fd[r]
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn frame_jacobian_drift_matches_finite_differences() {
    for model in [chain_model(), branched_model()] {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let eta = model.dof();
        for _ in 0..10 {
            let (theta, theta_dot) = rand_state(&mut rng, eta);
            let kin = KinCache::new(&model, &theta);
            for fid in 0..model.frames().len() {
                let id = sepsim::multibody::model::FrameId(fid);
                let drift = kin.frame_jac_dot_qdot(id, &theta_dot);
                // (J(theta + e qd) - J(theta - e qd)) / 2e * qd
                let e = 1e-6;
                let jp = KinCache::new(&model, &(&theta + &theta_dot * e)).frame_jacobian(id);
                let jm = KinCache::new(&model, &(&theta - &theta_dot * e)).frame_jacobian(id);
                let fd = (jp - jm) / (2.0 * e) * &theta_dot;
                let err = scaled((&drift - &fd).amax(), drift.amax().max(fd.amax()));
                assert!(err < 1e-7, "frame {fid}: drift {drift:?} vs fd {fd:?}");
            }
        }
    }
}

/// Kinetic energy from finite-difference link velocities: independent of all
/// Jacobian code, anchored purely in forward kinematics.
fn kinetic_energy_fd(model: &RobotModel, theta: &DVector<f64>, theta_dot: &DVector<f64>) -> f64 {
    let e = 1e-6;
    let kp = KinCache::new(model, &(theta + theta_dot * e));
    let km = KinCache::new(model, &(theta - theta_dot * e));
    let mut t = 0.0;
    for (j, joint) in model.joints().iter().enumerate() {
        let v = (kp.coms[j] - km.coms[j]) / (2.0 * e);
        let w = (kp.angles[j] - km.angles[j]) / (2.0 * e);
        t += 0.5 * joint.link.mass * v.norm_squared() + 0.5 * joint.link.inertia * w * w;
    }
    t
}

#[test]
fn mass_matrix_reproduces_independent_kinetic_energy() {
    for model in [chain_model(), branched_model()] {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let (theta, theta_dot) = rand_state(&mut rng, model.dof());
            let terms = DynTerms::new(&model, &theta);
            let (t_quad, _) = terms.energy(&theta_dot);
            let t_fd = kinetic_energy_fd(&model, &theta, &theta_dot);
            let err = scaled((t_quad - t_fd).abs(), t_quad.abs());
            assert!(err < 1e-7, "KE mismatch: {t_quad} vs {t_fd}");
        }
    }
}

#[test]
fn mass_matrix_partials_match_finite_differences() {
    for model in [chain_model(), branched_model()] {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let eta = model.dof();
        for _ in 0..5 {
            let (theta, _) = rand_state(&mut rng, eta);
            let terms = DynTerms::new(&model, &theta);
            let h = 1e-6;
            for k in 0..eta {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[k] += h;
                tm[k] -= h;
                let dp = DynTerms::new(&model, &tp).d;
                let dm = DynTerms::new(&model, &tm).d;
                let fd = (dp - dm) / (2.0 * h);
                let err = scaled(
                    (&terms.d_partials[k] - &fd).amax(),
                    terms.d_partials[k].amax().max(fd.amax()),
                );
                assert!(err < 1e-6, "dD/dtheta_{k} mismatch, err {err:.3e}");
            }
        }
    }
}

#[test]
fn coriolis_satisfies_power_balance() {
    // v^T (Ddot - 2C) v = 0 for the Christoffel construction; catches
    // assembly and transposition mistakes in the partial contraction.
    for model in [chain_model(), branched_model()] {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let eta = model.dof();
        for _ in 0..20 {
            let (theta, theta_dot) = rand_state(&mut rng, eta);
            let terms = DynTerms::new(&model, &theta);
            let c = terms.coriolis(&theta_dot);
            let mut ddot = DMatrix::zeros(eta, eta);
            for k in 0..eta {
                ddot += &terms.d_partials[k] * theta_dot[k];
            }
            let v = DVector::from_fn(eta, |_, _| rng.gen_range(-1.0..1.0));
            let q = v.dot(&((&ddot - &c * 2.0) * &v));
            let scale = 1.0 + ddot.amax().max(c.amax());
            assert!((q / scale).abs() < 1e-12, "power balance violated: {q}");
        }
    }
}

#[test]
fn contracted_bias_equals_christoffel_product() {
    for model in [chain_model(), branched_model()] {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..20 {
            let (theta, theta_dot) = rand_state(&mut rng, model.dof());
            let terms = DynTerms::new(&model, &theta);
            let h1 = terms.bias(&theta_dot);
            let h2 = terms.coriolis(&theta_dot) * &theta_dot + &terms.g_vec;
            let err = scaled((&h1 - &h2).amax(), h1.amax().max(h2.amax()));
            assert!(err < 1e-13, "bias paths disagree: {err:.3e}");
        }
    }
}

#[test]
fn gravity_vector_matches_fd_potential() {
    for model in [chain_model(), branched_model()] {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let eta = model.dof();
        for _ in 0..5 {
            let (theta, _) = rand_state(&mut rng, eta);
            let terms = DynTerms::new(&model, &theta);
            let h = 1e-6;
            for k in 0..eta {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[k] += h;
                tm[k] -= h;
                let vp = DynTerms::new(&model, &tp).energy(&DVector::zeros(eta)).1;
                let vm = DynTerms::new(&model, &tm).energy(&DVector::zeros(eta)).1;
                let fd = (vp - vm) / (2.0 * h);
                let err = scaled((terms.g_vec[k] - fd).abs(), terms.g_vec[k].abs());
                assert!(err < 1e-7, "gravity row {k}: {} vs {fd}", terms.g_vec[k]);
            }
        }
    }
}

fn branched_constraints(model: &RobotModel) -> ConstraintSet {
    let pin = Constraint::PosePin {
        frame: model.frame("foot").unwrap(),
        target: Pose {
            x: 0.1,
            z: -0.9,
            phi: 0.2,
        },
    };
    let weld = Constraint::WeldLocal {
        child: model.frame("sock").unwrap(),
        anchor: model.frame("sock_anchor").unwrap(),
    };
    ConstraintSet::new(model, vec![pin, weld]).unwrap()
}

#[test]
fn weld_rows_differentiate_the_residual_on_surface() {
    // With the fixed joint's coordinates zeroed the weld is satisfied
    // exactly, and there d(residual)/dt along the flow equals J theta_dot.
    let model = branched_model();
    let set = ConstraintSet::new(
        &model,
        vec![Constraint::WeldLocal {
            child: model.frame("sock").unwrap(),
            anchor: model.frame("sock_anchor").unwrap(),
        }],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let eta = model.dof();
    let q0 = model.joint_coord(model.joint_index("sock").unwrap());
    for _ in 0..10 {
        let (mut theta, theta_dot) = rand_state(&mut rng, eta);
        theta[q0] = 0.0;
        theta[q0 + 1] = 0.0;
        theta[q0 + 2] = 0.0;
        let kin = KinCache::new(&model, &theta);
        let data = set.data(&kin, &theta_dot).unwrap();
        assert!(data.residual.amax() < 1e-14, "state not on surface");

        let e = 1e-6;
        let kp = KinCache::new(&model, &(&theta + &theta_dot * e));
        let km = KinCache::new(&model, &(&theta - &theta_dot * e));
        let rp = set.data(&kp, &theta_dot).unwrap().residual;
        let rm = set.data(&km, &theta_dot).unwrap().residual;
        let fd = (rp - rm) / (2.0 * e);
        let jv = &data.jac * &theta_dot;
        let err = scaled((&jv - &fd).amax(), jv.amax().max(fd.amax()));
        assert!(err < 1e-7, "weld rows vs residual flow: {err:.3e}");
    }
}

#[test]
fn constraint_drift_matches_finite_differences() {
    // Jdot qd for the full stacked set, valid at any state.
    let model = branched_model();
    let set = branched_constraints(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let eta = model.dof();
    for _ in 0..10 {
        let (theta, theta_dot) = rand_state(&mut rng, eta);
        let kin = KinCache::new(&model, &theta);
        let data = set.data(&kin, &theta_dot).unwrap();
        let e = 1e-6;
        let kp = KinCache::new(&model, &(&theta + &theta_dot * e));
        let km = KinCache::new(&model, &(&theta - &theta_dot * e));
        let jp = set.data(&kp, &theta_dot).unwrap().jac;
        let jm = set.data(&km, &theta_dot).unwrap().jac;
        let fd = (jp - jm) / (2.0 * e) * &theta_dot;
        let err = scaled(
            (&data.jdot_qdot - &fd).amax(),
            data.jdot_qdot.amax().max(fd.amax()),
        );
        assert!(err < 1e-7, "drift vs fd: {err:.3e}");
    }
}

#[test]
fn substitution_and_kkt_dynamics_agree() {
    let model = branched_model();
    let set = branched_constraints(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    let eta = model.dof();
    let m = model.num_inputs();
    for _ in 0..20 {
        let (theta, theta_dot) = rand_state(&mut rng, eta);
        let u = DVector::from_fn(m, |_, _| rng.gen_range(-5.0..5.0));
        let ext = DVector::from_fn(eta, |_, _| rng.gen_range(-1.0..1.0));
        let (a1, l1) = forward_dynamics(&model, &set, &theta, &theta_dot, &u, Some(&ext)).unwrap();
        let (a2, l2) =
            forward_dynamics_kkt(&model, &set, &theta, &theta_dot, &u, Some(&ext)).unwrap();
        let ea = scaled((&a1 - &a2).amax(), a1.amax().max(a2.amax()));
        let el = scaled((&l1 - &l2).amax(), l1.amax().max(l2.amax()));
        assert!(ea < 1e-10, "accel paths disagree: {ea:.3e}");
        assert!(el < 1e-10, "multiplier paths disagree: {el:.3e}");
    }
}

#[test]
fn external_torque_equals_actuation_through_b() {
    let model = branched_model();
    let set = branched_constraints(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    let (theta, theta_dot) = rand_state(&mut rng, model.dof());
    let u = DVector::from_fn(model.num_inputs(), |_, _| rng.gen_range(-5.0..5.0));
    let bu = model.actuation_matrix() * &u;
    let zero = DVector::zeros(model.num_inputs());
    let (a1, l1) = forward_dynamics(&model, &set, &theta, &theta_dot, &u, None).unwrap();
    let (a2, l2) = forward_dynamics(&model, &set, &theta, &theta_dot, &zero, Some(&bu)).unwrap();
    assert!((&a1 - &a2).amax() < 1e-11);
    assert!((&l1 - &l2).amax() < 1e-11);
}

#[test]
fn static_weld_multiplier_reads_supported_weight() {
    // Base pinned at its zero pose; a fixed joint carries a sideways arm
    // (mount pi/2). Fully constrained and at rest, so the weld multiplier
    // must read the arm's weight in arm-local axes plus the gravity moment.
    let m_arm = 0.7;
    let com = 0.12;
    let joints = vec![
        Joint {
            name: "base".into(),
            kind: JointKind::PlanarBase,
            parent: None,
            anchor: 0.0,
            mount: 0.0,
            link: link(2.0, 0.3, 0.15, 0.01),
            actuation: None,
        },
        Joint {
            name: "arm".into(),
            kind: JointKind::Fixed3,
            parent: Some(0),
            anchor: 0.3,
            mount: std::f64::consts::FRAC_PI_2,
            link: link(m_arm, 0.25, com, 0.006),
            actuation: None,
        },
    ];
    let frames = vec![FrameDef {
        name: "arm_anchor".into(),
        joint: 0,
        offset: 0.3,
        rel_rot: std::f64::consts::FRAC_PI_2,
    }];
    let model = RobotModel::new(joints, frames, 9.81).unwrap();
    let set = ConstraintSet::new(
        &model,
        vec![
            Constraint::PosePin {
                frame: model.frame("base").unwrap(),
                target: Pose {
                    x: 0.0,
                    z: 0.0,
                    phi: 0.0,
                },
            },
            Constraint::WeldLocal {
                child: model.frame("arm").unwrap(),
                anchor: model.frame("arm_anchor").unwrap(),
            },
        ],
    )
    .unwrap();

    let theta = DVector::zeros(model.dof());
    let theta_dot = DVector::zeros(model.dof());
    let u = DVector::zeros(0);
    let (acc, lambda) = forward_dynamics(&model, &set, &theta, &theta_dot, &u, None).unwrap();
    assert!(acc.amax() < 1e-10, "fully constrained static: {acc}");

    let g = 9.81;
    // Weld rows (child-local): arm frame is rotated +pi/2, so world +z reads
    // as local +x. Gravity moment about the weld origin: com sits at world
    // (com, 0) relative to the weld, force (0, -m g).
    assert!((lambda[3] - m_arm * g).abs() < 1e-9, "local fx: {}", lambda[3]);
    assert!(lambda[4].abs() < 1e-9, "local fz: {}", lambda[4]);
    assert!(
        (lambda[5] - m_arm * g * com).abs() < 1e-9,
        "weld moment: {}",
        lambda[5]
    );
    // Pin rows (world): carries everything.
    assert!(lambda[0].abs() < 1e-9);
    assert!((lambda[1] - (2.0 + m_arm) * g).abs() < 1e-9);
    assert!((lambda[2] - m_arm * g * com).abs() < 1e-9);
}

#[test]
fn projection_restores_the_constraint_surface() {
    let model = branched_model();
    let set = branched_constraints(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    let eta = model.dof();

    // Start from a projected state, perturb, re-project.
    let (mut theta, mut theta_dot) = rand_state(&mut rng, eta);
    project_state(&model, &set, &mut theta, &mut theta_dot).unwrap();
    let clean = theta.clone();

    for k in 0..eta {
        theta[k] += rng.gen_range(-1e-4..1e-4);
        theta_dot[k] += rng.gen_range(-1e-4..1e-4);
    }
    project_state(&model, &set, &mut theta, &mut theta_dot).unwrap();
    let kin = KinCache::new(&model, &theta);
    let data = set.data(&kin, &theta_dot).unwrap();
    assert!(data.residual.amax() < 1e-12, "position residual after projection");
    assert!((&data.jac * &theta_dot).amax() < 1e-12, "velocity residual");
    // Projection of a small perturbation stays near where it started.
    assert!((&theta - &clean).amax() < 1e-2);
}

#[test]
fn constrained_dynamics_is_affine_in_the_input() {
    let model = branched_model();
    let set = branched_constraints(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(139);
    let (theta, theta_dot) = rand_state(&mut rng, model.dof());
    let dynamics = constrained_dynamics(&model, &set, &theta, &theta_dot, None).unwrap();
    for _ in 0..5 {
        let u = DVector::from_fn(model.num_inputs(), |_, _| rng.gen_range(-5.0..5.0));
        let (acc, lambda) = forward_dynamics(&model, &set, &theta, &theta_dot, &u, None).unwrap();
        assert!((&dynamics.accel(&u) - &acc).amax() < 1e-12);
        assert!((&dynamics.multiplier(&u) - &lambda).amax() < 1e-12);
    }
}

#[test]
fn model_validation_rejects_malformed_trees() {
    let base = Joint {
        name: "base".into(),
        kind: JointKind::PlanarBase,
        parent: None,
        anchor: 0.0,
        mount: 0.0,
        link: link(1.0, 0.3, 0.15, 0.01),
        actuation: None,
    };
    // Root must be a planar base.
    let bad = vec![Joint {
        kind: JointKind::Revolute,
        ..base.clone()
    }];
    assert!(RobotModel::new(bad, vec![], 9.81).is_err());

    // Duplicate names.
    let bad = vec![
        base.clone(),
        Joint {
            name: "base".into(),
            kind: JointKind::Revolute,
            parent: Some(0),
            anchor: 0.1,
            mount: 0.0,
            link: link(1.0, 0.2, 0.1, 0.01),
            actuation: None,
        },
    ];
    assert!(RobotModel::new(bad, vec![], 9.81).is_err());

    // Actuated fixed joint.
    let bad = vec![
        base.clone(),
        Joint {
            name: "j".into(),
            kind: JointKind::Fixed3,
            parent: Some(0),
            anchor: 0.1,
            mount: 0.0,
            link: link(1.0, 0.2, 0.1, 0.01),
            actuation: Some(1.0),
        },
    ];
    assert!(RobotModel::new(bad, vec![], 9.81).is_err());

    // Nonpositive mass.
    let bad = vec![Joint {
        link: link(0.0, 0.3, 0.15, 0.01),
        ..base.clone()
    }];
    assert!(RobotModel::new(bad, vec![], 9.81).is_err());

    // Unknown frame in a constraint set.
    let model = RobotModel::new(vec![base], vec![], 9.81).unwrap();
    assert!(model.frame("nope").is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn rotations_compose(a in -6.0f64..6.0, b in -6.0f64..6.0) {
            let lhs = sepsim::multibody::model::rot2(a) * sepsim::multibody::model::rot2(b);
            let rhs = sepsim::multibody::model::rot2(a + b);
            prop_assert!((lhs - rhs).amax() < 1e-12);
        }

        #[test]
        fn perp_is_quarter_turn(x in -10.0f64..10.0, z in -10.0f64..10.0) {
            let v = Vector2::new(x, z);
            let p = sepsim::multibody::model::perp(v);
            prop_assert!((p - sepsim::multibody::model::rot2(std::f64::consts::FRAC_PI_2) * v).amax() < 1e-12);
        }

        #[test]
        fn mass_matrix_stays_spd(seed in 0u64..4096) {
            let model = branched_model();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (theta, _) = rand_state(&mut rng, model.dof());
            let d = sepsim::multibody::dynamics::mass_matrix(&model, &theta).unwrap();
            prop_assert!(((&d - &d.transpose()).amax()) < 1e-12);
            prop_assert!(nalgebra::Cholesky::new(d).is_some());
        }
    }
}
