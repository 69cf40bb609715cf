//! The hybrid walking driver: flows each domain under the linearizing
//! controller, detects touchdown, applies the plastic impact, and alternates
//! domains, recording a fixed-rate trace along the way.
//!
//! Touchdown is an event of the swing sole's height, armed only past the
//! middle of the phase so liftoff and early-swing ground proximity cannot
//! retrigger it. The crossing is located by bisection on the integrator's
//! dense output, the state is projected back onto the active constraint
//! surface, and the next domain starts from the post-impact velocity with
//! its stance sole pinned at the touchdown pose.

use nalgebra::{DMatrix, DVector};

use crate::error::{SimError, SimResult};
use crate::gait::{hip_advance_weights, roles, stance_lever_arms, Domain, Gait, NUM_TRACKED};
use crate::hybrid::controller::{enter_domain, sole_frames, DomainSetup};
use crate::hybrid::impact::plastic_impact;
use crate::hybrid::ode::{bisect_event, DenseStep, Dopri5, OdeOptions};
use crate::hybrid::trace::{ImpactRecord, Trace, TraceRow};
use crate::multibody::{project_state, Constraint, ConstraintSet, KinCache, Pose};
use crate::prosthesis::Walker;

/// Driver options.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Number of touchdown transitions to simulate.
    pub steps: usize,
    /// Trace sample rate in Hz; samples land on the global grid `k / rate`.
    pub sample_rate: f64,
    /// Wall limit per domain pass, in simulated seconds.
    pub t_max_domain: f64,
    /// A hip lower than this fraction of leg length counts as a fall.
    pub fall_fraction: f64,
    pub ode: OdeOptions,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            steps: 10,
            sample_rate: 1000.0,
            t_max_domain: 3.0,
            fall_fraction: 0.6,
            ode: OdeOptions::default(),
        }
    }
}

/// Everything a finished walk hands back.
pub struct WalkOutcome {
    pub trace: Trace,
    pub impacts: Vec<ImpactRecord>,
    /// Touchdown times, one per completed step.
    pub step_times: Vec<f64>,
    /// Max-norm state mismatch between consecutive entries into the
    /// prosthesis-stance domain, forward base travel excluded.
    pub poincare: Vec<f64>,
    pub t_final: f64,
    pub theta: DVector<f64>,
    pub theta_dot: DVector<f64>,
    /// Domain the walk would enter next.
    pub next_domain: Domain,
}

fn stack(theta: &DVector<f64>, theta_dot: &DVector<f64>) -> DVector<f64> {
    let eta = theta.len();
    let mut x = DVector::zeros(2 * eta);
    x.rows_mut(0, eta).copy_from(theta);
    x.rows_mut(eta, eta).copy_from(theta_dot);
    x
}

fn split(x: &DVector<f64>, eta: usize) -> (DVector<f64>, DVector<f64>) {
    (x.rows(0, eta).into_owned(), x.rows(eta, eta).into_owned())
}

/// One fully evaluated trace sample.
fn sample_row(
    walker: &Walker,
    setup: &DomainSetup,
    t: f64,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> SimResult<TraceRow> {
    let ev = setup.eval(walker, theta, theta_dot)?;
    Ok(TraceRow {
        t,
        domain: setup.domain,
        theta: theta.clone(),
        theta_dot: theta_dot.clone(),
        u: ev.ctrl.u,
        wrench: ev.wrench,
        tau: ev.ctrl.tau,
        tau_dot: ev.tau_dot,
        tau_ddot: ev.tau_ddot,
        y: ev.ctrl.y,
    })
}

/// Emits grid samples covered by one dense step, stopping short of `cutoff`.
#[allow(clippy::too_many_arguments)]
fn emit_grid_rows(
    walker: &Walker,
    setup: &DomainSetup,
    dense: &DenseStep,
    next_k: &mut i64,
    dt: f64,
    cutoff: Option<f64>,
    trace: &mut Trace,
) -> SimResult<()> {
    let eta = walker.full.dof();
    loop {
        let tk = *next_k as f64 * dt;
        if tk > dense.t_end() + 1e-15 {
            return Ok(());
        }
        if let Some(hit) = cutoff {
            if tk >= hit - 1e-12 {
                return Ok(());
            }
        }
        let x = dense.eval(tk);
        let (mut th, mut thd) = split(&x, eta);
        project_state(&walker.full, &setup.set, &mut th, &mut thd)?;
        trace.push(sample_row(walker, setup, tk, &th, &thd)?);
        *next_k += 1;
    }
}

/// Exit data of one domain pass.
struct DomainExit {
    t_hit: f64,
    theta: DVector<f64>,
    theta_dot_minus: DVector<f64>,
}

/// Flows one domain from its entry state until touchdown.
fn integrate_domain(
    walker: &Walker,
    setup: &DomainSetup,
    opts: &SimOptions,
    trace: &mut Trace,
) -> SimResult<DomainExit> {
    let eta = walker.full.dof();
    trace.push(sample_row(
        walker,
        setup,
        setup.t_entry,
        &setup.theta_plus,
        &setup.theta_dot_plus,
    )?);

    let x0 = stack(&setup.theta_plus, &setup.theta_dot_plus);
    let mut stepper = Dopri5::new(|_t, x| setup.rhs(walker, x), setup.t_entry, x0, opts.ode)?;

    let dt = 1.0 / opts.sample_rate;
    let mut next_k = (setup.t_entry / dt).floor() as i64 + 1;
    while next_k as f64 * dt <= setup.t_entry + 1e-12 {
        next_k += 1;
    }

    let t_limit = setup.t_entry + opts.t_max_domain;
    // The guard arms once, past mid-phase with the swing sole clearly off the
    // ground, and stays armed: a latched flag survives the shrinking descent
    // samples near the crossing, where a sample-to-sample hysteresis would
    // disarm itself.
    let mut armed = false;

    loop {
        let dense = stepper.step(t_limit)?;
        let t_now = stepper.t();
        let (mut th, mut thd) = split(stepper.state(), eta);
        project_state(&walker.full, &setup.set, &mut th, &mut thd)?;
        stepper.set_state(t_now, stack(&th, &thd));

        let tau_now = setup.tau(&th);
        let g_now = setup.swing_sole_height(walker, &th);
        if !armed && tau_now >= 0.5 && g_now > 1e-6 {
            armed = true;
        }

        if armed && g_now <= 0.0 {
            let g = |_t: f64, x: &DVector<f64>| {
                setup.swing_sole_height(walker, &x.rows(0, eta).into_owned())
            };
            let (t_hit, x_hit) = bisect_event(&dense, g, dense.t0, dense.t_end());
            emit_grid_rows(walker, setup, &dense, &mut next_k, dt, Some(t_hit), trace)?;
            let (mut th_h, mut thd_h) = split(&x_hit, eta);
            project_state(&walker.full, &setup.set, &mut th_h, &mut thd_h)?;
            trace.push(sample_row(walker, setup, t_hit, &th_h, &thd_h)?);
            return Ok(DomainExit {
                t_hit,
                theta: th_h,
                theta_dot_minus: thd_h,
            });
        }

        emit_grid_rows(walker, setup, &dense, &mut next_k, dt, None, trace)?;

        let hip = th[walker.coords.base[1]];
        if hip < opts.fall_fraction * walker.leg_length {
            return Err(SimError::Fall { t: t_now, hip_height: hip });
        }
        if t_now >= t_limit - 1e-12 {
            return Err(SimError::Timeout {
                t_max: opts.t_max_domain,
            });
        }
    }
}

/// Contact stack for a domain entered at `theta`: stance sole pinned where it
/// stands, socket welded.
pub fn touchdown_stack(
    walker: &Walker,
    domain: Domain,
    theta: &DVector<f64>,
) -> SimResult<ConstraintSet> {
    let (stance, _) = sole_frames(walker, domain);
    let kin = KinCache::new(&walker.full, theta);
    let target = kin.frame_pose(stance);
    ConstraintSet::new(
        &walker.full,
        vec![
            Constraint::PosePin {
                frame: stance,
                target,
            },
            Constraint::WeldLocal {
                child: walker.frames.sock_child,
                anchor: walker.frames.sock_anchor,
            },
        ],
    )
}

/// Runs a walk of `opts.steps` touchdowns starting in the prosthesis-stance
/// domain, from `start` or from the gait's consistent entry state.
pub fn run_walk(
    walker: &Walker,
    gait: &Gait,
    opts: &SimOptions,
    start: Option<(DVector<f64>, DVector<f64>)>,
) -> SimResult<WalkOutcome> {
    let (mut theta, mut theta_dot) = match start {
        Some(s) => s,
        None => initial_state(walker, gait)?,
    };
    let mut t = 0.0;
    let mut domain = Domain::ProsthesisStance;
    let mut trace = Trace::new();
    let mut impacts = Vec::new();
    let mut step_times = Vec::new();
    let mut poincare = Vec::new();
    let mut last_entry: Option<DVector<f64>> = None;

    for _ in 0..opts.steps {
        if domain == Domain::ProsthesisStance {
            let s = stack(&theta, &theta_dot);
            if let Some(prev) = &last_entry {
                let mut d = &s - prev;
                // Forward travel is not part of the cyclic state.
                d[walker.coords.base[0]] = 0.0;
                poincare.push(d.amax());
            }
            last_entry = Some(s);
        }

        let setup = enter_domain(walker, gait, domain, t, &theta, &theta_dot)?;
        let seg_start = trace.rows.len();
        let exit = integrate_domain(walker, &setup, opts, &mut trace)?;
        step_times.push(exit.t_hit);
        if log::log_enabled!(log::Level::Debug) {
            let rows = &trace.rows[seg_start..];
            let max_u = rows.iter().map(|r| r.u.amax()).fold(0.0f64, f64::max);
            let max_v = rows
                .iter()
                .map(|r| r.theta_dot.amax())
                .fold(0.0f64, f64::max);
            log::debug!(
                "  entry: dp+ = {:+.4}, tau_rate+ = {:.3}, max|u| = {:.1}, max|qd| = {:.2}",
                setup.phase_start,
                setup.tau_rate_plus,
                max_u,
                max_v
            );
        }

        let next = domain.other();
        let new_set = touchdown_stack(walker, next, &exit.theta)?;
        let imp = plastic_impact(&walker.full, &new_set, &exit.theta, &exit.theta_dot_minus)?;
        log::debug!(
            "touchdown {:?} -> {:?} at t = {:.4} (dur {:.4}), tau_exit = {:.4}, \
             dKE = {:+.4}, hip z = {:.4}",
            domain,
            next,
            exit.t_hit,
            exit.t_hit - setup.t_entry,
            setup.tau(&exit.theta),
            imp.ke_after - imp.ke_before,
            exit.theta[walker.coords.base[1]]
        );
        impacts.push(ImpactRecord {
            t: exit.t_hit,
            from: domain,
            to: next,
            ke_before: imp.ke_before,
            ke_after: imp.ke_after,
            impulse: imp.impulse,
        });

        theta = exit.theta;
        theta_dot = imp.theta_dot_plus;
        t = exit.t_hit;
        domain = next;
    }

    Ok(WalkOutcome {
        trace,
        impacts,
        step_times,
        poincare,
        t_final: t,
        theta,
        theta_dot,
        next_domain: domain,
    })
}

/// Distance from `x0` to its own image under one full cycle of the walk
/// (one pass through each domain), as a weighted max norm: position errors
/// count as-is, velocity errors are scaled by 0.1 s. Forward base travel is
/// excluded, since the cycle advances it by design. `x0` must be a
/// prosthesis-stance entry state; integration failures propagate.
pub fn poincare_residual(
    walker: &Walker,
    gait: &Gait,
    opts: &SimOptions,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> SimResult<f64> {
    let cycle = SimOptions { steps: 2, ..*opts };
    let out = run_walk(walker, gait, &cycle, Some((theta.clone(), theta_dot.clone())))?;
    debug_assert_eq!(out.next_domain, Domain::ProsthesisStance);
    let mut dq = &out.theta - theta;
    dq[walker.coords.base[0]] = 0.0;
    let dv = &out.theta_dot - theta_dot;
    Ok(dq.amax().max(0.1 * dv.amax()))
}

/// Solves for a prosthesis-stance entry state consistent with the gait: the
/// prosthetic sole flat at the origin, socket weld closed, every position
/// output exactly zero, the phase at its start, and the velocity chosen so
/// all constraint rates and output rates vanish while the hip advances at the
/// gait's target rate.
pub fn initial_state(walker: &Walker, gait: &Gait) -> SimResult<(DVector<f64>, DVector<f64>)> {
    let domain = Domain::ProsthesisStance;
    let dgait = gait.domain(domain);
    let curves = dgait.curves();
    let eta = walker.full.dof();
    let r = roles(domain);

    let tracked: Vec<usize> = (0..NUM_TRACKED)
        .map(|row| {
            let j = walker.full.joint_index(r.tracked(row))?;
            Ok(walker.full.joint_coord(j))
        })
        .collect::<SimResult<_>>()?;
    let (r_sk, r_sa) = stance_lever_arms(&walker.full, &r)?;
    let w = hip_advance_weights(&walker.full, r.stance_knee, r.stance_ankle, r_sk, r_sa)?;
    let span = dgait.dp_end - dgait.dp_start;

    // Initial guess: tracked joints on their curves at phase zero, the
    // stance knee placed so the phase starts exactly at dp_start, base
    // adjusted so the prosthetic sole sits flat at the origin.
    let mut theta = DVector::zeros(eta);
    for (row, &coord) in tracked.iter().enumerate() {
        theta[coord] = curves[row].value(0.0);
    }
    let pk = walker.coords.pk;
    let pa = walker.coords.pa;
    theta[pk] = (dgait.dp_start - (r_sk + r_sa) * theta[pa]) / r_sk;
    theta[walker.coords.base[1]] = walker.leg_length;
    let kin = KinCache::new(&walker.full, &theta);
    let sole = kin.frame_pose(walker.frames.r_sole);
    theta[walker.coords.base[2]] -= sole.phi;
    let kin = KinCache::new(&walker.full, &theta);
    let sole = kin.frame_pose(walker.frames.r_sole);
    theta[walker.coords.base[0]] -= sole.x;
    theta[walker.coords.base[1]] -= sole.z;

    // The entry stack: prosthetic sole pinned flat at the origin, weld closed.
    let set = ConstraintSet::new(
        &walker.full,
        vec![
            Constraint::PosePin {
                frame: walker.frames.r_sole,
                target: Pose {
                    x: 0.0,
                    z: 0.0,
                    phi: 0.0,
                },
            },
            Constraint::WeldLocal {
                child: walker.frames.sock_child,
                anchor: walker.frames.sock_anchor,
            },
        ],
    )?;

    let residual = |theta: &DVector<f64>| -> SimResult<(DVector<f64>, DMatrix<f64>)> {
        let kin = KinCache::new(&walker.full, theta);
        let zero_vel = DVector::zeros(eta);
        let data = set.data(&kin, &zero_vel)?;
        let mut f = DVector::zeros(eta);
        let mut jac = DMatrix::zeros(eta, eta);
        f.rows_mut(0, 6).copy_from(&data.residual);
        jac.view_mut((0, 0), (6, eta)).copy_from(&data.jac);
        let dp = w.dot(theta);
        let tau = (dp - dgait.dp_start) / span;
        for (row, &coord) in tracked.iter().enumerate() {
            f[6 + row] = theta[coord] - curves[row].value(tau);
            let slope = curves[row].deriv1(tau) / span;
            for j in 0..eta {
                let e = if j == coord { 1.0 } else { 0.0 };
                jac[(6 + row, j)] = e - slope * w[j];
            }
        }
        f[11] = dp - dgait.dp_start;
        jac.row_mut(11).copy_from(&w.transpose());
        Ok((f, jac))
    };

    let (mut f, mut jac) = residual(&theta)?;
    let mut norm = f.amax();
    for _ in 0..60 {
        if norm <= 1e-13 {
            break;
        }
        let step = jac
            .clone()
            .full_piv_lu()
            .solve(&f)
            .ok_or(SimError::RankDeficient {
                what: "entry state solve",
                detail: "singular Jacobian while placing the entry state".into(),
            })?;
        // Backtracking line search on the residual norm.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let cand = &theta - &step * lambda;
            let (fc, jc) = residual(&cand)?;
            if fc.amax() < norm || norm <= 1e-12 {
                theta = cand;
                f = fc;
                jac = jc;
                norm = f.amax();
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm > 1e-10 {
        return Err(SimError::Config(format!(
            "no entry state consistent with the gait (residual {norm:.3e}); \
             the reference curves may be infeasible for this model"
        )));
    }

    // Velocity: constraint rates and output rates zero, hip advance rate at
    // the gait target. The matrix is the position solve's Jacobian with the
    // phase row driving v_hip.
    let mut rhs = DVector::zeros(eta);
    rhs[11] = dgait.v_hip;
    let mut theta_dot =
        jac.clone()
            .full_piv_lu()
            .solve(&rhs)
            .ok_or(SimError::RankDeficient {
                what: "entry velocity solve",
                detail: "singular velocity placement at the entry state".into(),
            })?;

    project_state(&walker.full, &set, &mut theta, &mut theta_dot)?;
    Ok((theta, theta_dot))
}
