//! Step-size control: acceptance test, step update, critical-step probing,
//! shift adaptation and the adaptive time loop.

use log::warn;

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::splitting::{Anchor, SchemeId, Splitter};

/// Below this an error estimate or a leading constant counts as zero.
pub const TINY: f64 = 1e-300;

/// Growth factor used when the error estimate vanishes.
pub const ZERO_ERR_GROWTH: f64 = 5.0;

/// Re-splitting `S^{a dt}` versus `S^{b dt} S^{c dt}` with `a = b + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ProbeSet {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// `a^3 - b^3`, the weight of `C0`.
    pub fn p(&self) -> f64 {
        self.a.powi(3) - self.b.powi(3)
    }

    /// `c^3`, the weight of `W = omega C0`.
    pub fn q(&self) -> f64 {
        self.c.powi(3)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbePolicy {
    /// Probe when the accepted-step counter is a multiple of `N`.
    EveryN(usize),
    /// Probe at the listed accepted-step counts.
    AtSteps(Vec<usize>),
    Never,
}

impl ProbePolicy {
    pub fn due(&self, i: usize) -> bool {
        match self {
            ProbePolicy::EveryN(n) => i % n == 0,
            ProbePolicy::AtSteps(list) => list.contains(&i),
            ProbePolicy::Never => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Accuracy tolerance.
    pub eta: f64,
    pub dt0: f64,
    pub eps0: f64,
    pub eps_max: f64,
    /// Probe set with `a = 1`, giving `e_big`.
    pub probe_big: ProbeSet,
    /// Probe set with `a = c` of the big set, giving `e_small`.
    pub probe_small: ProbeSet,
    pub zeta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
    /// Offset added to `eta` to force a rejection.
    pub c_reject: f64,
    pub upsilon: f64,
    pub probe_policy: ProbePolicy,
    pub max_rejections: usize,
}

impl ControllerConfig {
    pub fn new(eta: f64, dt0: f64) -> Self {
        Self {
            eta,
            dt0,
            eps0: 0.05,
            eps_max: 0.999,
            probe_big: ProbeSet::new(1.0, 0.5, 0.5),
            probe_small: ProbeSet::new(0.5, 0.4, 0.1),
            zeta: 0.9,
            beta: 0.1,
            gamma: 0.95,
            theta: 10.0,
            c_reject: 10.0,
            upsilon: 0.9,
            probe_policy: ProbePolicy::EveryN(10),
            max_rejections: 50,
        }
    }

    /// Checks every invariant; returns warnings for legal but unusual settings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::Config(msg));
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.eta) {
            return bad(format!("eta must be > 0, got {}", self.eta));
        }
        if !pos(self.dt0) {
            return bad(format!("dt0 must be > 0, got {}", self.dt0));
        }
        if !(self.upsilon > 0.0 && self.upsilon <= 1.0) {
            return bad(format!("upsilon must lie in (0, 1], got {}", self.upsilon));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return bad(format!("zeta must lie in (0, 1], got {}", self.zeta));
        }
        if !(self.beta > 0.0 && self.beta < self.gamma && self.gamma <= 1.0) {
            return bad(format!(
                "need 0 < beta < gamma <= 1, got beta = {}, gamma = {}",
                self.beta, self.gamma
            ));
        }
        if !(self.theta >= 1.0 && self.theta.is_finite()) {
            return bad(format!("theta must be >= 1, got {}", self.theta));
        }
        if !(self.c_reject > 1.0 && self.c_reject.is_finite()) {
            return bad(format!("C must be > 1, got {}", self.c_reject));
        }
        if !(self.eps0 > 0.0 && self.eps0 <= self.eps_max && self.eps_max < 1.0) {
            return bad(format!(
                "need 0 < eps0 <= eps_max < 1, got eps0 = {}, eps_max = {}",
                self.eps0, self.eps_max
            ));
        }
        for (name, s) in [("big", self.probe_big), ("small", self.probe_small)] {
            if !(s.b > 0.0 && s.c > 0.0) || (s.a - (s.b + s.c)).abs() > 1e-12 {
                return bad(format!(
                    "{name} probe set needs a = b + c with b, c > 0, got {s:?}"
                ));
            }
        }
        if self.probe_big.a != 1.0 {
            return bad(format!(
                "big probe set needs a = 1, got {}",
                self.probe_big.a
            ));
        }
        if (self.probe_small.a - self.probe_big.c).abs() > 1e-12 {
            return bad("small probe set needs a equal to c of the big set".into());
        }
        let det =
            self.probe_big.p() * self.probe_small.q() - self.probe_small.p() * self.probe_big.q();
        if det.abs() < 1e-12 {
            return bad("probe sets give a singular system".into());
        }
        if let ProbePolicy::EveryN(0) = self.probe_policy {
            return bad("probe period N must be >= 1".into());
        }
        if self.max_rejections == 0 {
            return bad("max_rejections must be >= 1".into());
        }
        let mut warnings = Vec::new();
        if self.eps_max >= 0.5 {
            warnings.push(format!(
                "eps_max = {} >= 1/2: shifts beyond 1/2 use a backward reaction substep",
                self.eps_max
            ));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub t: f64,
    /// Accepted steps so far.
    pub i: usize,
    pub dt: f64,
    pub eps: f64,
    pub dt_star: Option<f64>,
    pub c0: Option<f64>,
    pub omega: Option<f64>,
    pub estimate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// `err >= eta`.
    ErrAboveTol,
    /// The step exceeded the critical step.
    DtAboveDtStar,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::ErrAboveTol => "err>eta",
            RejectReason::DtAboveDtStar => "dt>dt_star",
        }
    }
}

/// One attempted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Time at the start of the attempt.
    pub t: f64,
    pub dt: f64,
    pub eps: f64,
    pub err: f64,
    pub dt_star: Option<f64>,
    pub c0: Option<f64>,
    pub omega: Option<f64>,
    pub probed: bool,
    pub accepted: bool,
    pub reason: Option<RejectReason>,
}

/// `upsilon * dt * sqrt(eta / err)`, or `5 dt` when `err` vanishes.
pub fn next_dt(dt: f64, err: f64, eta: f64, upsilon: f64) -> f64 {
    if err < TINY {
        return ZERO_ERR_GROWTH * dt;
    }
    upsilon * dt * (eta / err).sqrt()
}

/// Strict acceptance test `err < eta`.
pub fn accept_step(err: f64, eta: f64) -> Result<bool> {
    if err.is_nan() {
        return Err(Error::Numeric("error estimate is NaN".into()));
    }
    Ok(err < eta)
}

/// Solves `e_i = dt^3 [(a_i^3 - b_i^3) C0 + c_i^3 W]` for both probe sets.
/// Returns `(max(C0, 0), max(W / max(C0, TINY), 0))`.
pub fn estimate_c0_omega(
    e_big: f64,
    e_small: f64,
    dt: f64,
    cfg: &ControllerConfig,
) -> Result<(f64, f64)> {
    let (p1, q1) = (cfg.probe_big.p(), cfg.probe_big.q());
    let (p2, q2) = (cfg.probe_small.p(), cfg.probe_small.q());
    let det = p1 * q2 - p2 * q1;
    if det == 0.0 {
        return Err(Error::Config("singular probe system".into()));
    }
    let dt3 = dt * dt * dt;
    let c0 = (e_big * q2 - e_small * q1) / (dt3 * det);
    let w = (p1 * e_small - p2 * e_big) / (dt3 * det);
    let c0 = if c0 < 0.0 {
        warn!("negative leading constant C0 = {c0:e} clamped to 0");
        0.0
    } else {
        c0
    };
    Ok((c0, (w / c0.max(TINY)).max(0.0)))
}

/// `zeta * err / (C0 dt^2)`, infinite when `C0` or `err` is below [`TINY`].
pub fn estimate_dt_star(err: f64, dt: f64, eps: f64, c0: f64, zeta: f64) -> f64 {
    if err < TINY {
        return f64::INFINITY;
    }
    if c0 < TINY {
        warn!("C0 below floor; no critical step detected");
        return f64::INFINITY;
    }
    let c_eps = err / (eps * dt * dt);
    zeta * eps * c_eps / c0
}

/// Shift making the current step critical, scaled by `theta` and capped.
pub fn adapt_epsilon(eps: f64, err: f64, dt: f64, c0: f64, theta: f64, eps_max: f64) -> f64 {
    if err < TINY {
        return eps_max;
    }
    let raw = eps * c0 * dt * dt * dt / err;
    (theta * raw).min(eps_max)
}

/// Probe states partway through a step.
struct Probe {
    e_small: f64,
    /// `S^{b1 dt} S^{c1 dt}` on the monitored species.
    split: Vec<f64>,
}

fn run_probes(sp: &Splitter, a: &Anchor, dt: f64, cfg: &ControllerConfig) -> Result<Probe> {
    let (big, small) = (cfg.probe_big, cfg.probe_small);
    let mut fine = vec![0.0; a.mon_values.len()];
    sp.strang2_monitored(a, &mut fine, a.t, small.c * dt)?;
    sp.strang2_monitored(a, &mut fine, a.t + small.c * dt, small.b * dt)?;
    let mut coarse = vec![0.0; a.mon_values.len()];
    sp.strang2_monitored(a, &mut coarse, a.t, big.c * dt)?;
    let e_small = sp.err_mon_vs_mon(a, &coarse, &fine);
    sp.strang2_monitored(a, &mut coarse, a.t + big.c * dt, big.b * dt)?;
    Ok(Probe {
        e_small,
        split: coarse,
    })
}

/// The probe norms `(e_big, e_small)` for a step of `dt` from `state`.
pub fn probe_errors(
    sp: &Splitter,
    state: &FieldState,
    dt: f64,
    cfg: &ControllerConfig,
) -> Result<(f64, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("step must be > 0, got {dt}")));
    }
    cfg.validate()?;
    let a = sp.anchor(state)?;
    let p = run_probes(sp, &a, dt, cfg)?;
    let mut main = vec![0.0; a.values.len()];
    sp.scheme_anchored(&SchemeId::strang2(), &a, &mut main, a.t, dt)?;
    Ok((sp.err_full_vs_mon(&a, &main, &p.split), p.e_small))
}

/// Result of a run: final state, every attempt, and states at requested times.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: FieldState,
    pub log: Vec<StepRecord>,
    pub snapshots: Vec<FieldState>,
}

/// Next time the loop must land on exactly: an event, a snapshot or the end.
fn next_barrier(sp: &Splitter, stops: &[f64], t: f64, t_end: f64) -> f64 {
    let ev = sp
        .model()
        .next_event_after(t)
        .map_or(f64::INFINITY, |e| e.time);
    let st = stops
        .iter()
        .copied()
        .find(|&s| s > t)
        .unwrap_or(f64::INFINITY);
    ev.min(st).min(t_end)
}

/// Whether a step of `dt` from `t` should be snapped onto `barrier`.
fn reaches(dt: f64, t: f64, barrier: f64) -> bool {
    dt >= (barrier - t) * (1.0 - 1e-12)
}

/// Adaptive integration of `u0` up to `t_end`.
///
/// `stops` lists times (sorted) at which snapshots are taken.
pub fn run_adaptive(
    sp: &Splitter,
    u0: &FieldState,
    t_end: f64,
    cfg: &ControllerConfig,
    stops: &[f64],
) -> Result<RunOutput> {
    for w in cfg.validate()? {
        warn!("{w}");
    }
    if !(t_end >= u0.t()) {
        return Err(Error::Config(format!(
            "end time {t_end} precedes start time {}",
            u0.t()
        )));
    }
    if stops.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(
            "snapshot times must increase strictly".into(),
        ));
    }
    let mut state = u0.clone();
    let mut st = ControllerState {
        t: u0.t(),
        i: 0,
        dt: cfg.dt0,
        eps: cfg.eps0,
        dt_star: None,
        c0: None,
        omega: None,
        estimate: false,
    };
    let mut log = Vec::new();
    let mut snapshots = Vec::new();
    let t0 = st.t;
    let mut stops_iter = stops
        .iter()
        .copied()
        .filter(|&s| s >= t0 && s <= t_end)
        .peekable();
    if let Some(&s) = stops_iter.peek() {
        if s == st.t {
            snapshots.push(state.clone());
            stops_iter.next();
        }
    }
    let mut rejections = 0usize;

    while st.t < t_end {
        let barrier = next_barrier(sp, stops, st.t, t_end);
        let mut dt = st.dt;
        let lands = reaches(dt, st.t, barrier);
        if lands {
            dt = barrier - st.t;
        }
        let a = sp.anchor(&state)?;

        let probe = if cfg.probe_policy.due(st.i) || st.estimate {
            match run_probes(sp, &a, dt, cfg) {
                Ok(p) => Some(p),
                Err(e) => {
                    warn!("probe failed at t = {:e}: {e}", st.t);
                    st.estimate = true;
                    None
                }
            }
        } else {
            None
        };

        let (main, _shifted, err) = sp.fused_anchored(&a, dt, st.eps)?;

        if let Some(p) = &probe {
            let e_big = sp.err_full_vs_mon(&a, &main, &p.split);
            let (c0, omega) = estimate_c0_omega(e_big, p.e_small, dt, cfg)?;
            let ds = estimate_dt_star(err, dt, st.eps, c0, cfg.zeta);
            st.c0 = Some(c0);
            st.omega = Some(omega);
            st.dt_star = ds.is_finite().then_some(ds);
            st.estimate = ds.is_finite() && !(dt >= cfg.beta * ds && dt <= cfg.gamma * ds);
        }

        if st.estimate && st.i > 0 {
            if let Some(c0) = st.c0.filter(|&c| c >= TINY) {
                let eps_old = st.eps;
                st.eps = adapt_epsilon(eps_old, err, dt, c0, cfg.theta, cfg.eps_max);
                if err >= TINY {
                    let c_eps = err / (eps_old * dt * dt);
                    st.dt_star = Some(cfg.zeta * st.eps * c_eps / c0);
                } else {
                    st.dt_star = None;
                }
                st.estimate = false;
            }
        }

        let dt_star = st.dt_star.unwrap_or(f64::INFINITY);
        let dt_new = next_dt(dt, err, cfg.eta, cfg.upsilon);
        let (err_eff, forced) = if dt > dt_star {
            (cfg.eta + cfg.c_reject, true)
        } else {
            (err, false)
        };
        if dt_new > dt_star && st.eps != cfg.eps_max {
            st.estimate = true;
        }
        let mut dt_next = dt_new.min(dt_star);
        let accepted = accept_step(err_eff, cfg.eta)?;

        log.push(StepRecord {
            t: st.t,
            dt,
            eps: st.eps,
            err,
            dt_star: st.dt_star,
            c0: st.c0,
            omega: st.omega,
            probed: probe.is_some(),
            accepted,
            reason: match (accepted, forced) {
                (true, _) => None,
                (false, true) => Some(RejectReason::DtAboveDtStar),
                (false, false) => Some(RejectReason::ErrAboveTol),
            },
        });

        if accepted {
            let t_new = if lands { barrier } else { st.t + dt };
            state = sp.materialize(&a, &main, t_new);
            st.t = t_new;
            st.i += 1;
            rejections = 0;
            if lands {
                if let Some(e) = sp.model().events().iter().find(|e| e.time == t_new) {
                    if let Some(reset) = e.reset_dt {
                        dt_next = reset;
                    }
                }
                if stops_iter.peek() == Some(&t_new) {
                    snapshots.push(state.clone());
                    stops_iter.next();
                }
            }
        } else {
            rejections += 1;
            if rejections > cfg.max_rejections {
                return Err(Error::TooManyRejections {
                    count: rejections,
                    t: st.t,
                    log,
                });
            }
        }
        if !(dt_next > 0.0) {
            return Err(Error::Numeric(format!(
                "step size collapsed to {dt_next:e} at t = {:e}",
                st.t
            )));
        }
        st.dt = dt_next;
    }
    Ok(RunOutput {
        final_state: state,
        log,
        snapshots,
    })
}

/// The plain embedded scheme: fixed shift `eps0`, no critical-step machinery.
pub fn run_embedded(
    sp: &Splitter,
    u0: &FieldState,
    t_end: f64,
    cfg: &ControllerConfig,
) -> Result<RunOutput> {
    cfg.validate()?;
    let (eta, eps, upsilon) = (cfg.eta, cfg.eps0, cfg.upsilon);
    let mut state = u0.clone();
    let mut t = u0.t();
    let mut dt = cfg.dt0;
    let mut log = Vec::new();
    let mut rejections = 0;
    while t < t_end {
        let barrier = next_barrier(sp, &[], t, t_end);
        let lands = reaches(dt, t, barrier);
        if lands {
            dt = barrier - t;
        }
        let a = sp.anchor(&state)?;
        let (main, _, err) = sp.fused_anchored(&a, dt, eps)?;
        let accepted = accept_step(err, eta)?;
        let mut dt_next = next_dt(dt, err, eta, upsilon);
        log.push(StepRecord {
            t,
            dt,
            eps,
            err,
            dt_star: None,
            c0: None,
            omega: None,
            probed: false,
            accepted,
            reason: (!accepted).then_some(RejectReason::ErrAboveTol),
        });
        if accepted {
            t = if lands { barrier } else { t + dt };
            state = sp.materialize(&a, &main, t);
            rejections = 0;
            if lands {
                if let Some(reset) = sp
                    .model()
                    .events()
                    .iter()
                    .find(|e| e.time == t)
                    .and_then(|e| e.reset_dt)
                {
                    dt_next = reset;
                }
            }
        } else {
            rejections += 1;
            if rejections > cfg.max_rejections {
                return Err(Error::TooManyRejections {
                    count: rejections,
                    t,
                    log,
                });
            }
        }
        dt = dt_next;
    }
    Ok(RunOutput {
        final_state: state,
        log,
        snapshots: Vec::new(),
    })
}
