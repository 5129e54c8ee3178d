//! RODAS4: a 6-stage, L-stable, stiffly accurate Rosenbrock method of order 4
//! with an embedded order-3 solution.
//!
//! The solver advances an increment `delta` relative to a fixed anchor state
//! owned by the system, so that `y = anchor + delta`. Differences between
//! nearby trajectories sharing an anchor then keep full relative precision.

const GAMMA: f64 = 0.25;

const A21: f64 = 1.544;
const A31: f64 = 0.946_678_528_081_582_6;
const A32: f64 = 0.255_701_169_898_328_4;
const A41: f64 = 3.314_825_187_068_521;
const A42: f64 = 2.896_124_015_972_201;
const A43: f64 = 0.998_641_913_997_781_7;
const A51: f64 = 1.221_224_509_226_641;
const A52: f64 = 6.019_134_481_288_629;
const A53: f64 = 12.537_083_329_320_87;
const A54: f64 = -0.687_886_036_105_895;

const C21: f64 = -5.6688;
const C31: f64 = -2.430_093_356_833_875;
const C32: f64 = -0.206_359_915_709_191_5;
const C41: f64 = -0.107_352_905_815_137_5;
const C42: f64 = -9.594_562_251_023_355;
const C43: f64 = -20.470_286_148_096_16;
const C51: f64 = 7.496_443_313_967_647;
const C52: f64 = -10.246_804_314_643_52;
const C53: f64 = -33.999_903_528_199_05;
const C54: f64 = 11.708_908_932_061_6;
const C61: f64 = 8.083_246_795_921_522;
const C62: f64 = -7.981_132_988_064_893;
const C63: f64 = -31.521_594_328_743_71;
const C64: f64 = 16.319_305_431_231_36;
const C65: f64 = -6.058_818_238_834_054;

/// A system `y' = F(y)` written in increments about a fixed anchor.
pub(crate) trait StiffSystem {
    fn dim(&self) -> usize;

    /// The anchor; `y = anchor + delta`.
    fn anchor(&self) -> &[f64];

    /// `out = F(anchor + delta)`.
    fn rhs(&mut self, delta: &[f64], out: &mut [f64]);

    /// Evaluates and stores the Jacobian at `anchor + delta`.
    fn jacobian(&mut self, delta: &[f64]);

    /// Factorizes `shift * I - J`. Returns `false` if singular.
    fn factor(&mut self, shift: f64) -> bool;

    /// Overwrites `b` with `(shift * I - J)^{-1} b`.
    fn solve(&mut self, b: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RosOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RosFailure {
    /// Non-finite right-hand side at the initial state.
    NonFinite,
    TooManySteps(usize),
    StepUnderflow(f64),
}

impl std::fmt::Display for RosFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RosFailure::NonFinite => write!(f, "non-finite reaction rates"),
            RosFailure::TooManySteps(n) => write!(f, "no convergence within {n} substeps"),
            RosFailure::StepUnderflow(h) => write!(f, "substep size underflow (h = {h:e})"),
        }
    }
}

#[derive(Debug, Default, Clone)]
pub(crate) struct RosWork {
    k: [Vec<f64>; 6],
    y: Vec<f64>,
    f: Vec<f64>,
    ynew: Vec<f64>,
}

impl RosWork {
    pub(crate) fn new(dim: usize) -> Self {
        let mut w = Self::default();
        w.resize(dim);
        w
    }

    fn resize(&mut self, dim: usize) {
        for k in &mut self.k {
            k.resize(dim, 0.0);
        }
        self.y.resize(dim, 0.0);
        self.f.resize(dim, 0.0);
        self.ynew.resize(dim, 0.0);
    }
}

/// Advances `delta` by `tau` (either sign). The first substep tries `h0` or,
/// if absent, the whole interval. Returns a suggested next substep magnitude
/// and the number of accepted substeps.
pub(crate) fn integrate<S: StiffSystem>(
    sys: &mut S,
    delta: &mut [f64],
    tau: f64,
    h0: Option<f64>,
    opts: RosOptions,
    work: &mut RosWork,
) -> Result<(f64, usize), RosFailure> {
    let dim = sys.dim();
    work.resize(dim);
    if tau == 0.0 {
        return Ok((h0.unwrap_or(0.0), 0));
    }
    let dir = tau.signum();
    let mut remaining = tau.abs();
    let mut h = h0.filter(|h| *h > 0.0).unwrap_or(remaining).min(remaining);
    let h_min = 1e-14 * remaining;

    let RosWork { k, y, f, ynew } = work;
    let [k1, k2, k3, k4, k5, k6] = k;

    sys.rhs(delta, f);
    if f.iter().any(|v| !v.is_finite()) {
        return Err(RosFailure::NonFinite);
    }
    sys.jacobian(delta);

    let mut steps = 0usize;
    let mut accepted = 0usize;
    let mut last_rejected = false;
    let mut have_f = true;
    while remaining > 0.0 {
        if steps >= opts.max_steps {
            return Err(RosFailure::TooManySteps(opts.max_steps));
        }
        steps += 1;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < h_min {
            return Err(RosFailure::StepUnderflow(h));
        }
        if !have_f {
            sys.rhs(delta, f);
            sys.jacobian(delta);
            have_f = true;
        }
        let hs = dir * h;
        let inv_h = 1.0 / hs;
        if !sys.factor(1.0 / (GAMMA * hs)) {
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        k1.copy_from_slice(f);
        sys.solve(k1);

        for i in 0..dim {
            y[i] = delta[i] + A21 * k1[i];
        }
        sys.rhs(y, k2);
        for i in 0..dim {
            k2[i] += C21 * k1[i] * inv_h;
        }
        sys.solve(k2);

        for i in 0..dim {
            y[i] = delta[i] + A31 * k1[i] + A32 * k2[i];
        }
        sys.rhs(y, k3);
        for i in 0..dim {
            k3[i] += (C31 * k1[i] + C32 * k2[i]) * inv_h;
        }
        sys.solve(k3);

        for i in 0..dim {
            y[i] = delta[i] + A41 * k1[i] + A42 * k2[i] + A43 * k3[i];
        }
        sys.rhs(y, k4);
        for i in 0..dim {
            k4[i] += (C41 * k1[i] + C42 * k2[i] + C43 * k3[i]) * inv_h;
        }
        sys.solve(k4);

        for i in 0..dim {
            y[i] = delta[i] + A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i];
        }
        sys.rhs(y, k5);
        for i in 0..dim {
            k5[i] += (C51 * k1[i] + C52 * k2[i] + C53 * k3[i] + C54 * k4[i]) * inv_h;
        }
        sys.solve(k5);

        for i in 0..dim {
            y[i] += k5[i];
        }
        sys.rhs(y, k6);
        for i in 0..dim {
            k6[i] += (C61 * k1[i] + C62 * k2[i] + C63 * k3[i] + C64 * k4[i] + C65 * k5[i]) * inv_h;
        }
        sys.solve(k6);

        let anchor = sys.anchor();
        let mut sum = 0.0;
        for i in 0..dim {
            ynew[i] = y[i] + k6[i];
            let sc = opts.atol
                + opts.rtol
                    * (anchor[i] + delta[i])
                        .abs()
                        .max((anchor[i] + ynew[i]).abs());
            let r = k6[i] / sc;
            sum += r * r;
        }
        let err = (sum / dim as f64).sqrt();

        if !err.is_finite() {
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        let mut fac = (0.9 * err.powf(-0.25)).clamp(0.2, 6.0);
        if err <= 1.0 {
            delta.copy_from_slice(ynew);
            accepted += 1;
            if last {
                remaining = 0.0;
            } else {
                remaining -= h;
            }
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            have_f = false;
            h *= fac;
        } else {
            h *= fac;
            last_rejected = true;
        }
    }
    Ok((h, accepted))
}
