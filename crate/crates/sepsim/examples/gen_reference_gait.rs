//! Builds the reference gait shipped in `assets/`, then walks it to verify
//! stability before writing the file.
//!
//! The curves are designed in pose space. On the exact tracking manifold the
//! closed loop is a kinematic playback: the stance ankle curve together with
//! the phase identity fixes the stance knee, the stance hip curve is chosen
//! as `rh = -pa` so the torso stays upright, and the swing leg sweeps
//! forward with a knee-flexion bump for ground clearance. The swing ankle
//! curve keeps the swing sole level so the foot lands flat, and the swing
//! curves keep a nonzero descent rate at the end so touchdown is transversal.
//! Identical curve tables serve both domains; feedback absorbs the mass
//! asymmetry of the prosthetic side.

use nalgebra::DVector;

use sepsim::gait::{roles, stance_lever_arms, Bezier, Domain, DomainGait, Gains, Gait, CURVE_COEFFS, NUM_TRACKED};
use sepsim::hybrid::{initial_state, run_walk, SimOptions};
use sepsim::multibody::KinCache;
use sepsim::prosthesis::{build_walker, reference_params, Walker};

/// Gait design knobs.
struct Design {
    /// Leg tilt (rad) at touchdown: half the step's angular sweep.
    sigma0: f64,
    /// Peak swing knee flexion magnitude (rad).
    kappa: f64,
    /// Hip advance rate target (m/s).
    v_hip: f64,
}

fn seeded_gait(w: f64, d: &Design) -> Gait {
    let dp_end = w * d.sigma0;
    let dp_start = -dp_end;

    let mut alpha = [[0.0; CURVE_COEFFS]; NUM_TRACKED];
    // Stance ankle: linear rollover, pa from -sigma0 to +sigma0.
    for (i, a) in alpha[0].iter_mut().enumerate() {
        *a = d.sigma0 * (2.0 * i as f64 / 6.0 - 1.0);
    }
    // Stance hip mirrors the ankle so the torso stays upright.
    for i in 0..CURVE_COEFFS {
        alpha[1][i] = -alpha[0][i];
    }
    // Swing hip: sweep from -sigma0 to +sigma0. The swing foot clears the
    // ground only while the swing leg is tilted further from vertical than
    // the stance leg (height ~ (S^2 - u^2) with u the stance tilt fraction
    // advancing at slope 2), so the thigh leaves fast (start slope 3.6),
    // overshoots the landing angle mid-swing, and retracts onto it. The
    // retraction also cancels most of the foot's forward speed at touchdown,
    // which keeps the impact loss small; the descent itself comes from the
    // stance leg vaulting over the flat foot.
    let sweep = [-1.0, -0.4, 0.4, 0.95, 1.2, 1.2, 1.0];
    for i in 0..CURVE_COEFFS {
        alpha[2][i] = d.sigma0 * sweep[i];
    }
    // Swing knee: front-loaded flexion bump. Flexion lifts the foot while
    // the thigh points backward or vertical (early and mid swing, where the
    // sweep alone would drag the toe), but once the thigh tilts forward the
    // same flexion brings the shank back toward vertical and lowers the
    // foot, so the bump decays to zero well before touchdown.
    let bump = [0.0, 0.8, 1.3, 1.0, 0.45, 0.05, 0.0];
    for i in 0..CURVE_COEFFS {
        alpha[3][i] = -d.kappa * bump[i];
    }
    // Swing ankle: keep the swing sole level (angles sum to zero).
    for i in 0..CURVE_COEFFS {
        alpha[4][i] = -(alpha[2][i] + alpha[3][i]);
    }

    let dg = DomainGait {
        v_hip: d.v_hip,
        dp_start,
        dp_end,
        alpha,
    };
    Gait::new(dg.clone(), dg, Gains::default()).unwrap()
}

/// Exact pose of the kinematic playback at phase `tau` in the
/// prosthesis-stance domain: every output zero, constraints closed.
fn nominal_pose(walker: &Walker, gait: &Gait, tau: f64) -> DVector<f64> {
    let dg = gait.domain(Domain::ProsthesisStance);
    let r = roles(Domain::ProsthesisStance);
    let (r_sk, r_sa) = stance_lever_arms(&walker.full, &r).unwrap();
    let w = r_sk + r_sa;
    let curves: Vec<Bezier> = dg.curves();

    let dp = dg.dp_start + tau * (dg.dp_end - dg.dp_start);
    let pa = curves[0].value(tau);
    let pk = (dp - w * pa) / r_sk;
    let rh = curves[1].value(tau);
    let bphi = -(rh + pk + pa);
    let lh = curves[2].value(tau);
    let lk = curves[3].value(tau);
    let la = curves[4].value(tau);

    let c = &walker.coords;
    let mut theta = DVector::zeros(walker.full.dof());
    theta[c.base[2]] = bphi;
    theta[c.lh] = lh;
    theta[c.lk] = lk;
    theta[c.la] = la;
    theta[c.rh] = rh;
    theta[c.pk] = pk;
    theta[c.pa] = pa;
    // Translate so the stance sole sits at the origin.
    let kin = KinCache::new(&walker.full, &theta);
    let sole = kin.frame_pose(walker.frames.r_sole);
    theta[c.base[0]] -= sole.x;
    theta[c.base[1]] -= sole.z;
    theta
}

/// Prints the playback profile: swing sole height and forward position,
/// stance knee, torso pitch, hip height.
fn print_profile(walker: &Walker, gait: &Gait) {
    println!("  tau     h_swing   x_swing   pk        bphi      hip_z");
    for k in 0..=20 {
        let tau = k as f64 / 20.0;
        let theta = nominal_pose(walker, gait, tau);
        let kin = KinCache::new(&walker.full, &theta);
        let swing = kin.frame_pose(walker.frames.l_sole);
        println!(
            "  {tau:5.2}  {:8.4}  {:8.4}  {:8.4}  {:8.4}  {:8.4}",
            swing.z,
            swing.x,
            theta[walker.coords.pk],
            theta[walker.coords.base[2]],
            theta[walker.coords.base[1]],
        );
    }
}

fn main() {
    env_logger::init();
    let walker = build_walker(reference_params()).unwrap();
    let design = Design {
        sigma0: 0.13,
        kappa: 0.55,
        v_hip: 0.60,
    };
    // Lever arms of the prosthetic stance leg set the phase scale.
    let w_scale = {
        let r = roles(Domain::ProsthesisStance);
        let (r_sk, r_sa) = stance_lever_arms(&walker.full, &r).unwrap();
        r_sk + r_sa
    };
    let gait = seeded_gait(w_scale, &design);
    println!(
        "design: sigma0 = {:.3} rad, kappa = {:.3} rad, v_hip = {:.2} m/s",
        design.sigma0, design.kappa, design.v_hip
    );
    println!(
        "phase span {:.4} m .. {:.4} m",
        gait.domain(Domain::ProsthesisStance).dp_start,
        gait.domain(Domain::ProsthesisStance).dp_end
    );
    print_profile(&walker, &gait);

    let (theta, theta_dot) = match initial_state(&walker, &gait) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("entry state solve failed: {e}");
            std::process::exit(1);
        }
    };

    let opts = SimOptions {
        steps: 30,
        sample_rate: 200.0,
        ..SimOptions::default()
    };
    match run_walk(&walker, &gait, &opts, Some((theta, theta_dot))) {
        Ok(out) => {
            let mut prev = 0.0;
            for (k, t) in out.step_times.iter().enumerate() {
                let dur = t - prev;
                prev = *t;
                let poin = if k >= 2 && k % 2 == 0 {
                    format!("{:.3e}", out.poincare[k / 2 - 1])
                } else {
                    "-".into()
                };
                let dke = out.impacts[k].ke_after - out.impacts[k].ke_before;
                println!(
                    "step {k:2}  t = {t:7.3}  dur = {dur:.4}  dKE = {dke:8.4}  poincare = {poin}"
                );
            }
            let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets");
            std::fs::create_dir_all(dir).unwrap();
            let path = std::path::Path::new(dir).join("reference.gait");
            gait.save(&path).unwrap();
            println!("wrote {}", path.display());
        }
        Err(e) => {
            eprintln!("walk failed: {e}");
            std::process::exit(1);
        }
    }
}
