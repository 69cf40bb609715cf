//! Walk traces: fixed-rate samples of the closed-loop state, input, socket
//! wrench, phase signals, and outputs, written as CSV.
//!
//! Floats are written with seventeen significant digits so a read-back is
//! bit-identical to the values that were simulated; downstream comparisons at
//! recorded knots are therefore exact, not within-parse-error. Rows within
//! one domain pass have strictly increasing times; the pre-impact exit row of
//! one pass and the post-impact entry row of the next share a time stamp but
//! differ in the domain column, so per-segment interpolation never sees a
//! duplicated node.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use nalgebra::{DVector, Vector3};

use crate::error::{SimError, SimResult};
use crate::gait::Domain;

/// Coordinates of the traced model.
pub const TRACE_DOF: usize = 12;
/// Actuated inputs of the traced model.
pub const TRACE_INPUTS: usize = 6;
/// Controller output rows.
pub const TRACE_OUTPUTS: usize = 6;

/// One trace sample.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: f64,
    pub domain: Domain,
    pub theta: DVector<f64>,
    pub theta_dot: DVector<f64>,
    pub u: DVector<f64>,
    /// Socket weld multiplier (socket-frame force pair, torque).
    pub wrench: Vector3<f64>,
    pub tau: f64,
    pub tau_dot: f64,
    pub tau_ddot: f64,
    pub y: DVector<f64>,
}

/// A whole walk's samples in time order.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

fn header() -> String {
    let mut cols = vec!["t".to_string(), "domain".to_string()];
    cols.extend((0..TRACE_DOF).map(|i| format!("th{i}")));
    cols.extend((0..TRACE_DOF).map(|i| format!("thd{i}")));
    cols.extend((0..TRACE_INPUTS).map(|i| format!("u{i}")));
    cols.extend(["ff_x", "ff_z", "ff_m"].map(String::from));
    cols.extend(["tau", "tau_dot", "tau_ddot"].map(String::from));
    cols.extend((0..TRACE_OUTPUTS).map(|i| format!("y{i}")));
    cols.join(",")
}

/// Column count implied by the header.
const NUM_COLS: usize = 2 + 2 * TRACE_DOF + TRACE_INPUTS + 3 + 3 + TRACE_OUTPUTS;

impl Trace {
    pub fn new() -> Trace {
        Trace { rows: Vec::new() }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> SimResult<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", header())?;
        for row in &self.rows {
            let mut fields = Vec::with_capacity(NUM_COLS);
            fields.push(format!("{:.16e}", row.t));
            fields.push(format!("{}", row.domain.index()));
            for v in row.theta.iter().chain(row.theta_dot.iter()) {
                fields.push(format!("{v:.16e}"));
            }
            for v in row.u.iter() {
                fields.push(format!("{v:.16e}"));
            }
            for v in row.wrench.iter() {
                fields.push(format!("{v:.16e}"));
            }
            for v in [row.tau, row.tau_dot, row.tau_ddot] {
                fields.push(format!("{v:.16e}"));
            }
            for v in row.y.iter() {
                fields.push(format!("{v:.16e}"));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> SimResult<Trace> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| SimError::Schema(format!("{}: empty trace file", path.display())))??;
        if first != header() {
            return Err(SimError::Schema(format!(
                "{}: unexpected trace header",
                path.display()
            )));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != NUM_COLS {
                return Err(SimError::Schema(format!(
                    "{}: line {}: expected {} columns, found {}",
                    path.display(),
                    lineno + 2,
                    NUM_COLS,
                    fields.len()
                )));
            }
            let bad = |what: &str| {
                SimError::Schema(format!(
                    "{}: line {}: unparsable {what}",
                    path.display(),
                    lineno + 2
                ))
            };
            let f = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            let t = f(fields[0], "time")?;
            let domain =
                Domain::from_index(fields[1].parse::<usize>().map_err(|_| bad("domain"))?)?;
            let mut at = 2usize;
            let mut take = |n: usize, what: &'static str| -> SimResult<DVector<f64>> {
                let mut v = DVector::zeros(n);
                for i in 0..n {
                    v[i] = f(fields[at + i], what)?;
                }
                at += n;
                Ok(v)
            };
            let theta = take(TRACE_DOF, "theta")?;
            let theta_dot = take(TRACE_DOF, "theta_dot")?;
            let u = take(TRACE_INPUTS, "input")?;
            let w = take(3, "wrench")?;
            let phase = take(3, "phase")?;
            let y = take(TRACE_OUTPUTS, "output")?;
            rows.push(TraceRow {
                t,
                domain,
                theta,
                theta_dot,
                u,
                wrench: Vector3::new(w[0], w[1], w[2]),
                tau: phase[0],
                tau_dot: phase[1],
                tau_ddot: phase[2],
                y,
            });
        }
        if rows.is_empty() {
            return Err(SimError::Schema(format!(
                "{}: trace has a header but no rows",
                path.display()
            )));
        }
        Ok(Trace { rows })
    }

    /// Contiguous single-domain runs, in order. Each run is one pass through
    /// a domain: its first row is the post-transition entry state.
    pub fn segments(&self) -> Vec<(Domain, Range<usize>)> {
        let mut out = Vec::new();
        let mut start = 0usize;
        for i in 1..=self.rows.len() {
            if i == self.rows.len() || self.rows[i].domain != self.rows[start].domain {
                out.push((self.rows[start].domain, start..i));
                start = i;
            }
        }
        out
    }
}

/// Signals a replay needs at an off-knot time.
#[derive(Debug, Clone)]
pub struct InterpSample {
    pub theta: DVector<f64>,
    pub theta_dot: DVector<f64>,
    pub wrench: Vector3<f64>,
    pub tau: f64,
    pub tau_dot: f64,
    pub tau_ddot: f64,
}

/// Cubic (four-point Lagrange) interpolation over one trace segment's knots.
pub struct SegmentInterp<'a> {
    rows: &'a [TraceRow],
}

impl<'a> SegmentInterp<'a> {
    pub fn new(rows: &'a [TraceRow]) -> SimResult<SegmentInterp<'a>> {
        if rows.len() < 2 {
            return Err(SimError::Schema(
                "trace segment needs at least two rows to interpolate".into(),
            ));
        }
        for k in 1..rows.len() {
            if rows[k].t <= rows[k - 1].t {
                return Err(SimError::Schema(format!(
                    "trace times not strictly increasing within a segment \
                     ({:.9} then {:.9})",
                    rows[k - 1].t,
                    rows[k].t
                )));
            }
        }
        Ok(SegmentInterp { rows })
    }

    pub fn t_start(&self) -> f64 {
        self.rows[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.rows[self.rows.len() - 1].t
    }

    /// Lagrange window and weights for time `t` (clamped to the segment).
    fn weights(&self, t: f64) -> (usize, [f64; 4]) {
        let n = self.rows.len();
        let t = t.clamp(self.t_start(), self.t_end());
        // Knot interval containing t.
        let mut i = match self
            .rows
            .binary_search_by(|r| r.t.partial_cmp(&t).expect("finite times"))
        {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        };
        i = i.min(n - 2);
        let start = i.saturating_sub(1).min(n.saturating_sub(4));
        let m = (n - start).min(4);
        let mut w = [0.0f64; 4];
        for a in 0..m {
            let ta = self.rows[start + a].t;
            let mut prod = 1.0;
            for b in 0..m {
                if a != b {
                    let tb = self.rows[start + b].t;
                    prod *= (t - tb) / (ta - tb);
                }
            }
            w[a] = prod;
        }
        (start, w)
    }

    pub fn eval(&self, t: f64) -> InterpSample {
        let (start, w) = self.weights(t);
        let n = (self.rows.len() - start).min(4);
        let dim = self.rows[0].theta.len();
        let mut theta = DVector::zeros(dim);
        let mut theta_dot = DVector::zeros(dim);
        let mut wrench = Vector3::zeros();
        let mut tau = 0.0;
        let mut tau_dot = 0.0;
        let mut tau_ddot = 0.0;
        for a in 0..n {
            let r = &self.rows[start + a];
            let wa = w[a];
            theta.axpy(wa, &r.theta, 1.0);
            theta_dot.axpy(wa, &r.theta_dot, 1.0);
            wrench += r.wrench * wa;
            tau += wa * r.tau;
            tau_dot += wa * r.tau_dot;
            tau_ddot += wa * r.tau_ddot;
        }
        InterpSample {
            theta,
            theta_dot,
            wrench,
            tau,
            tau_dot,
            tau_ddot,
        }
    }
}

/// Bookkeeping for one touchdown transition.
#[derive(Debug, Clone)]
pub struct ImpactRecord {
    pub t: f64,
    pub from: Domain,
    pub to: Domain,
    pub ke_before: f64,
    pub ke_after: f64,
    /// Constraint impulse of the post-transition stack.
    pub impulse: DVector<f64>,
}

/// Writes impact records next to a trace for inspection.
pub fn write_impacts_csv(path: &Path, impacts: &[ImpactRecord]) -> SimResult<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "t,from,to,ke_before,ke_after,imp0,imp1,imp2,imp3,imp4,imp5")?;
    for r in impacts {
        let imp: Vec<String> = (0..6)
            .map(|i| format!("{:.16e}", r.impulse.get(i).copied().unwrap_or(0.0)))
            .collect();
        writeln!(
            w,
            "{:.16e},{},{},{:.16e},{:.16e},{}",
            r.t,
            r.from.index(),
            r.to.index(),
            r.ke_before,
            r.ke_after,
            imp.join(",")
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, domain: Domain, seed: f64) -> TraceRow {
        TraceRow {
            t,
            domain,
            theta: DVector::from_fn(TRACE_DOF, |i, _| seed + i as f64 * 0.137),
            theta_dot: DVector::from_fn(TRACE_DOF, |i, _| -seed + i as f64 * 0.011),
            u: DVector::from_fn(TRACE_INPUTS, |i, _| seed * (i as f64 + 1.0) / 3.0),
            wrench: Vector3::new(seed, -2.0 * seed, 0.5 * seed),
            tau: 0.3 * seed,
            tau_dot: 1.1,
            tau_ddot: -0.2,
            y: DVector::from_fn(TRACE_OUTPUTS, |i, _| 1e-7 * seed * i as f64),
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("sepsim_trace_roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut trace = Trace::new();
        // Awkward values: subnormal-ish, negative zero, irrational fractions.
        for (k, t) in [0.0, 1.0 / 3.0, 0.5f64.sqrt(), 1.2345678912345678]
            .iter()
            .enumerate()
        {
            let mut r = row(*t, Domain::ProsthesisStance, 0.1 + k as f64);
            r.theta[0] = -0.0;
            r.theta[1] = 1e-300;
            r.theta[2] = std::f64::consts::PI;
            trace.push(r);
        }
        trace.write_csv(&path).unwrap();
        let back = Trace::read_csv(&path).unwrap();
        assert_eq!(back.rows.len(), trace.rows.len());
        for (a, b) in trace.rows.iter().zip(&back.rows) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            for i in 0..TRACE_DOF {
                assert_eq!(a.theta[i].to_bits(), b.theta[i].to_bits());
                assert_eq!(a.theta_dot[i].to_bits(), b.theta_dot[i].to_bits());
            }
            for i in 0..TRACE_INPUTS {
                assert_eq!(a.u[i].to_bits(), b.u[i].to_bits());
            }
            for i in 0..3 {
                assert_eq!(a.wrench[i].to_bits(), b.wrench[i].to_bits());
            }
            assert_eq!(a.tau_ddot.to_bits(), b.tau_ddot.to_bits());
        }
    }

    #[test]
    fn segments_split_on_domain_changes() {
        let mut trace = Trace::new();
        for t in [0.0, 0.1, 0.2] {
            trace.push(row(t, Domain::ProsthesisStance, t));
        }
        for t in [0.2, 0.3] {
            trace.push(row(t, Domain::ProsthesisSwing, t));
        }
        trace.push(row(0.3, Domain::ProsthesisStance, 0.9));
        let segs = trace.segments();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0], (Domain::ProsthesisStance, 0..3));
        assert_eq!(segs[1], (Domain::ProsthesisSwing, 3..5));
        assert_eq!(segs[2], (Domain::ProsthesisStance, 5..6));
    }

    #[test]
    fn interpolation_is_exact_at_knots_and_for_cubics() {
        // A cubic in t must be reproduced exactly by four-point Lagrange.
        let poly = |t: f64| 0.3 - 1.2 * t + 0.7 * t * t + 0.25 * t * t * t;
        let mut trace = Trace::new();
        for k in 0..7 {
            let t = 0.05 * k as f64;
            let mut r = row(t, Domain::ProsthesisStance, 1.0);
            r.theta.fill(poly(t));
            r.tau = poly(t);
            trace.push(r);
        }
        let segs = trace.segments();
        let interp = SegmentInterp::new(&trace.rows[segs[0].1.clone()]).unwrap();
        // Exact (bitwise) at a knot: the knot's own basis function evaluates
        // to exactly 1.0 and every other basis carries an exactly-zero factor.
        let knot_t = trace.rows[3].t;
        let at_knot = interp.eval(knot_t);
        assert_eq!(at_knot.tau.to_bits(), trace.rows[3].tau.to_bits());
        // Cubic reproduction off-knot.
        for t in [0.012, 0.111, 0.234, 0.299] {
            let s = interp.eval(t);
            assert!((s.tau - poly(t)).abs() < 1e-13, "t = {t}");
            assert!((s.theta[4] - poly(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn truncated_rows_and_bad_headers_are_schema_errors() {
        let dir = std::env::temp_dir().join("sepsim_trace_schema");
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.csv");
        let mut trace = Trace::new();
        trace.push(row(0.0, Domain::ProsthesisStance, 0.3));
        trace.write_csv(&good).unwrap();

        let text = std::fs::read_to_string(&good).unwrap();
        let bad_header = dir.join("bad_header.csv");
        std::fs::write(&bad_header, text.replacen("t,domain", "time,dom", 1)).unwrap();
        assert!(matches!(
            Trace::read_csv(&bad_header),
            Err(SimError::Schema(_))
        ));

        let truncated = dir.join("truncated.csv");
        let mut lines: Vec<&str> = text.lines().collect();
        let shortened = lines[1].rsplit_once(',').unwrap().0;
        lines[1] = shortened;
        std::fs::write(&truncated, lines.join("\n")).unwrap();
        assert!(matches!(
            Trace::read_csv(&truncated),
            Err(SimError::Schema(_))
        ));

        let empty = dir.join("empty.csv");
        std::fs::write(&empty, format!("{}\n", super::header())).unwrap();
        assert!(matches!(Trace::read_csv(&empty), Err(SimError::Schema(_))));
    }
}
