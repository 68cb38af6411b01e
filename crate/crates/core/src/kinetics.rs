//! Kinetic source terms `f(u, w)` and the scalar quantities derived from
//! them: iterated logarithms, the asymptotic damping rates `μ_r` and the
//! mass cap `M₁`.
//!
//! Every built-in source has the form `f(s, w) = s·(c(w) − d(s))` with a
//! growth coefficient `c` that is affine and nonincreasing in `w` and a
//! damping coefficient `d(s)` that grows without bound. The estimators
//! below rely on that structure.

use alloc::vec::Vec;

use crate::error::{check_param, Error, Result};
use crate::math;
use crate::tower::Tower;

/// Largest `m` with `e^[m]` representable in `f64` (`e^[4] = e^(3.8·10⁶)`).
pub const MAX_TOWER: u32 = 3;

/// `e^[m]`: `exp` applied `m` times to 1.
pub fn e_tower(m: u32) -> Result<f64> {
    if m > MAX_TOWER {
        return Err(Error::Overflow { height: m });
    }
    let mut x = 1.0;
    for _ in 0..m {
        x = math::exp(x);
    }
    Ok(x)
}

/// `ln^[i](s)`, the `i`-fold composition of `ln`. Fails when one of the
/// arguments fed to `ln` is nonpositive.
pub fn iter_log(i: u32, s: f64) -> Result<f64> {
    let mut x = s;
    for j in 0..i {
        if x.is_nan() || x <= 0.0 {
            return Err(Error::Domain {
                iterate: j + 1,
                value: x,
            });
        }
        x = math::ln(x);
    }
    Ok(x)
}

/// `h(z) = ln^[m](z + e^[m])` together with `h'` and `h''`.
///
/// `h' = 1 / Π_{i=0}^{m−1} ln^[i](y)` and `h'' = −h'²·(1 + Σ_{k=1}^{m−1}
/// Π_{i=k}^{m−1} ln^[i](y))` with `y = z + e^[m]`.
pub fn shifted_iter_log(m: u32, z: f64) -> Result<(f64, f64, f64)> {
    check_param("m", m as f64, m >= 1, "an integer >= 1")?;
    let y = z + e_tower(m)?;
    let logs = iter_logs(m, y)?;
    let prod: f64 = logs[..m as usize].iter().product();
    let h1 = 1.0 / prod;
    let dprod = 1.0
        + (1..m as usize)
            .map(|k| logs[k..m as usize].iter().product::<f64>())
            .sum::<f64>();
    Ok((logs[m as usize], h1, -h1 * h1 * dprod))
}

/// `2h'(y) + y h''(y)` for `h = ln^[m]` at `y = z + e^[m]`, in the product
/// form `(Π_{i=0}^{m−1} ln^[i] y)^{-1}·(1 − Σ_{k=1}^{m−1} Π_{i=1}^{k} (ln^[i] y)^{-1})`.
pub fn dissipation_weight(m: u32, z: f64) -> Result<f64> {
    check_param("m", m as f64, m >= 1, "an integer >= 1")?;
    let y = z + e_tower(m)?;
    let logs = iter_logs(m, y)?;
    let prod: f64 = logs[..m as usize].iter().product();
    let mut acc = 1.0;
    let mut sum = 0.0;
    for l in &logs[1..m as usize] {
        acc /= l;
        sum += acc;
    }
    Ok((1.0 - sum) / prod)
}

/// `[y, ln y, …, ln^[m] y]`
fn iter_logs(m: u32, y: f64) -> Result<Vec<f64>> {
    let mut v = Vec::with_capacity(m as usize + 1);
    v.push(y);
    for i in 1..=m {
        v.push(iter_log(1, v[i as usize - 1]).map_err(|_| Error::Domain {
            iterate: i,
            value: v[i as usize - 1],
        })?);
    }
    Ok(v)
}

/// Closed family of kinetic sources.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "snake_case")
)]
pub enum KineticSpec {
    /// `f ≡ 0`
    Zero,
    /// `μ u (1 − u − w)`
    Logistic { mu: f64 },
    /// `u (a − w − b u / ln^γ(u + 1))`, `γ ∈ (0, 1)`
    SubLogPow { a: f64, b: f64, gamma: f64 },
    /// `u (a − w − b u / ln ln(u + e))`
    SubLogLogLog { a: f64, b: f64 },
    /// `u (1 − w − μ u / (ln(u + 1) · Π_{i=2}^{k} ln^[i](u + e^[i])))`,
    /// `1 ≤ k ≤ 3`.
    IterLog { k: u32, mu: f64 },
}

impl KineticSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| check_param(name, v, v > 0.0 && v.is_finite(), "> 0");
        let finite = |name, v: f64| check_param(name, v, v.is_finite(), "a finite number");
        match *self {
            KineticSpec::Zero => Ok(()),
            KineticSpec::Logistic { mu } => positive("mu", mu),
            KineticSpec::SubLogPow { a, b, gamma } => {
                finite("a", a)?;
                positive("b", b)?;
                check_param("gamma", gamma, gamma > 0.0 && gamma < 1.0, "a value in (0, 1)")
            }
            KineticSpec::SubLogLogLog { a, b } => {
                finite("a", a)?;
                positive("b", b)
            }
            KineticSpec::IterLog { k, mu } => {
                check_param("k", k as f64, (1..=MAX_TOWER).contains(&k), "an integer in 1..=3")?;
                positive("mu", mu)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, KineticSpec::Zero)
    }

    /// `f(s, w)`; `f(0, w) = 0` for every variant.
    pub fn eval(&self, s: f64, w: f64) -> f64 {
        if s <= 0.0 || self.is_zero() {
            return 0.0;
        }
        s * (self.growth(w) - self.damping(s))
    }

    /// `c(w)` in `f = s·(c(w) − d(s))`.
    fn growth(&self, w: f64) -> f64 {
        match *self {
            KineticSpec::Zero => 0.0,
            KineticSpec::Logistic { mu } => mu * (1.0 - w),
            KineticSpec::SubLogPow { a, .. } | KineticSpec::SubLogLogLog { a, .. } => a - w,
            KineticSpec::IterLog { .. } => 1.0 - w,
        }
    }

    /// `d(s)` in `f = s·(c(w) − d(s))`, for `s > 0`.
    fn damping(&self, s: f64) -> f64 {
        match *self {
            KineticSpec::Zero => 0.0,
            KineticSpec::Logistic { mu } => mu * s,
            KineticSpec::SubLogPow { b, gamma, .. } => b * s / math::powf(math::ln1p(s), gamma),
            KineticSpec::SubLogLogLog { b, .. } => b * s / math::ln1p(math::ln1p(s / math::E)),
            KineticSpec::IterLog { k, mu } => {
                let mut p = math::ln1p(s);
                for i in 2..=k {
                    // shift makes the factor equal 1 at s = 0
                    let shift = e_tower(i).expect("k validated");
                    p *= iter_log(i, s + shift).expect("argument above e^[i]");
                }
                mu * s / p
            }
        }
    }

    /// `ln(d(s)/s) = c₀ + Σ_j c_j ln^[j] s` for `ln s > 200`, where every
    /// finite shift of `s` is below double precision. Returns `(c₀, c)`.
    fn ln_damping_over_s_asymptotic(&self) -> (f64, [f64; 5]) {
        let mut c = [0.0; 5];
        let c0 = match *self {
            KineticSpec::Zero => f64::NEG_INFINITY,
            KineticSpec::Logistic { mu } => math::ln(mu),
            KineticSpec::SubLogPow { b, gamma, .. } => {
                c[2] = -gamma;
                math::ln(b)
            }
            KineticSpec::SubLogLogLog { b, .. } => {
                c[3] = -1.0;
                math::ln(b)
            }
            KineticSpec::IterLog { k, mu } => {
                for cj in &mut c[2..=k as usize + 1] {
                    *cj = -1.0;
                }
                math::ln(mu)
            }
        };
        (c0, c)
    }

    /// `b'` used for the linear cap `f ≤ a' − b' s`.
    fn cap_slope(&self) -> f64 {
        match *self {
            KineticSpec::Zero => 0.0,
            KineticSpec::Logistic { mu } | KineticSpec::IterLog { mu, .. } => mu,
            KineticSpec::SubLogPow { b, .. } | KineticSpec::SubLogLogLog { b, .. } => b,
        }
    }
}

/// `f(s, w)` for a spec; see [`KineticSpec::eval`].
pub fn eval_f(spec: &KineticSpec, s: f64, w: f64) -> f64 {
    spec.eval(s, w)
}

/// Constants with `f(s, w) ≤ a − b s` on `(0, ∞) × [0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceCap {
    pub a: f64,
    pub b: f64,
}

/// A validated [`KineticSpec`] together with its linear cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinetics {
    spec: KineticSpec,
    cap: Option<SourceCap>,
}

impl Kinetics {
    pub fn new(spec: KineticSpec) -> Result<Self> {
        spec.validate()?;
        let cap = if spec.is_zero() {
            None
        } else {
            let b = spec.cap_slope();
            let sup = sup_over_s(|s| spec.eval(s, 0.0) + b * s)?;
            Some(SourceCap {
                a: sup * (1.0 + 1e-9) + 1e-12,
                b,
            })
        };
        Ok(Self { spec, cap })
    }

    pub fn zero() -> Self {
        Self {
            spec: KineticSpec::Zero,
            cap: None,
        }
    }

    pub fn spec(&self) -> &KineticSpec {
        &self.spec
    }

    pub fn cap(&self) -> Option<SourceCap> {
        self.cap
    }

    #[inline]
    pub fn eval(&self, s: f64, w: f64) -> f64 {
        self.spec.eval(s, w)
    }
}

/// `sup_{s>0} φ(s)` for a single-humped `φ` with `φ(0⁺) = 0`.
///
/// Coarse scan in `ln s` (widened upward while the maximum sits on the last
/// point), then golden-section refinement around the best scan point.
pub(crate) fn sup_over_s(phi: impl Fn(f64) -> f64) -> Result<f64> {
    const STEP: f64 = 0.25;
    let lo = math::ln(1e-8);
    let mut hi = math::ln(1e8);
    loop {
        let n = libm::ceil((hi - lo) / STEP) as usize;
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 0..=n {
            let v = phi(math::exp(lo + STEP * j as f64));
            if v > best.1 {
                best = (j, v);
            }
        }
        if best.0 == n {
            hi += 8.0 * math::ln(10.0);
            if hi > 690.0 {
                return Err(Error::Unbounded {
                    what: "supremum of f(s, w) + η s",
                });
            }
            continue;
        }
        let a = lo + STEP * best.0.saturating_sub(1) as f64;
        let b = lo + STEP * (best.0 + 1) as f64;
        let (_, v) = golden_max(|t| phi(math::exp(t)), a, b, 1e-12);
        return Ok(v.max(best.1).max(0.0));
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal function on
/// `[a, b]`. Returns `(argmax, max)`.
pub(crate) fn golden_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `M₁ = ‖u₀‖_{L¹} + |Ω| inf_{η∈(0,b']} sup_{s>0, 0<w<w_max} (f(s,w) + ηs)/η`.
///
/// Every built-in `f` is nonincreasing in `w`, so the inner supremum is the
/// limit `w → 0`. The outer objective is convex in `1/η`, hence unimodal in
/// `ln η`.
pub fn m1_compute(kinetics: &Kinetics, u0_mass: f64, area: f64, w_max: f64) -> Result<f64> {
    check_param("u0_mass", u0_mass, u0_mass >= 0.0, ">= 0")?;
    check_param("area", area, area > 0.0, "> 0")?;
    check_param("w_max", w_max, w_max >= 0.0, ">= 0")?;
    let Some(cap) = kinetics.cap() else {
        return Ok(u0_mass);
    };
    let spec = *kinetics.spec();
    let objective = |ln_eta: f64| -> Result<f64> {
        let eta = math::exp(ln_eta);
        Ok(sup_over_s(|s| spec.eval(s, 0.0) + eta * s)? / eta)
    };

    let hi = math::ln(cap.b);
    let lo = hi - 30.0;
    const STEP: f64 = 0.5;
    let n = libm::round((hi - lo) / STEP) as usize;
    let mut best = (n, objective(hi)?);
    for j in 0..n {
        let v = objective(lo + STEP * j as f64)?;
        if v < best.1 {
            best = (j, v);
        }
    }
    let a = lo + STEP * best.0.saturating_sub(1) as f64;
    let b = (lo + STEP * (best.0 + 1) as f64).min(hi);
    let mut err = None;
    let (_, neg) = golden_max(
        |t| match objective(t) {
            Ok(v) => -v,
            Err(e) => {
                err = Some(e);
                f64::NEG_INFINITY
            }
        },
        a,
        b,
        1e-10,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let inf = (-neg).min(best.1).max(0.0);
    Ok(u0_mass + area * inf)
}

/// Value of `μ_r`: a finite limit inferior or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MuEstimate {
    Finite(f64),
    Infinite,
}

impl MuEstimate {
    /// `+∞` maps to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match self {
            MuEstimate::Finite(v) => *v,
            MuEstimate::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, MuEstimate::Infinite)
    }
}

/// Increasing sample points `s_1 < … < s_n` for the `liminf`, possibly far
/// beyond `f64` range.
#[derive(Clone, Debug, PartialEq)]
pub struct TailSchedule {
    points: Vec<Tower>,
}

impl TailSchedule {
    /// `n` points geometric in `s` between `s_min` and `s_max`.
    pub fn geometric(s_min: f64, s_max: f64, n: usize) -> Result<Self> {
        check_param("s_min", s_min, s_min > 1.0, "> 1")?;
        check_param(
            "s_max",
            s_max,
            s_max > s_min && s_max.is_finite(),
            "finite and > s_min",
        )?;
        check_param("points", n as f64, n >= 16, ">= 16")?;
        let (a, b) = (math::ln(s_min), math::ln(s_max));
        let points = (0..n)
            .map(|j| Tower::exp_iter(1, a + (b - a) * j as f64 / (n - 1) as f64))
            .collect();
        Ok(Self { points })
    }

    /// `n` points geometric in `ln ln s`, from `s_min` up to
    /// `s = exp(exp(lnln_max))`.
    pub fn iterated(s_min: f64, lnln_max: f64, n: usize) -> Result<Self> {
        check_param("s_min", s_min, s_min > math::E, "> e")?;
        check_param("points", n as f64, n >= 16, ">= 16")?;
        let a = math::ln(math::ln(s_min));
        check_param(
            "lnln_max",
            lnln_max,
            lnln_max > a && lnln_max.is_finite(),
            "finite and > ln ln s_min",
        )?;
        let (la, lb) = (math::ln(a), math::ln(lnln_max));
        let points = (0..n)
            .map(|j| {
                let lnln = math::exp(la + (lb - la) * j as f64 / (n - 1) as f64);
                Tower::exp_iter(2, lnln)
            })
            .collect();
        Ok(Self { points })
    }

    fn start_for(r: u32) -> Result<f64> {
        Ok(1e2f64.max(10.0 * e_tower(r)?))
    }

    /// 64 points geometric in `s` up to `10¹²`, starting at
    /// `max(10², 10·e^[r])`.
    pub fn standard(r: u32) -> Result<Self> {
        Self::geometric(Self::start_for(r)?, 1e12, 64)
    }

    /// 64 points geometric in `ln ln s` up to `ln ln s = 10³⁰⁰`, starting at
    /// `max(10², 10·e^[r])`.
    pub fn extended(r: u32) -> Result<Self> {
        Self::iterated(Self::start_for(r)?, 1e300, 64)
    }

    pub fn points(&self) -> &[Tower] {
        &self.points
    }
}

/// Divergence detection for [`mu_r_estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuOptions {
    /// Tail values above this count as divergent...
    pub divergence_threshold: f64,
    /// ...when the last `growth_window` of them are nondecreasing.
    pub growth_window: usize,
}

impl Default for MuOptions {
    fn default() -> Self {
        Self {
            divergence_threshold: 1e6,
            growth_window: 8,
        }
    }
}

/// `−f(s, w) Π_{i=1}^r ln^[i] s / s²`.
///
/// Up to `ln s = 200` this evaluates `f` directly. Beyond, `s + c = s` in
/// double precision for every shift `c` appearing in `f`, and the
/// expression is evaluated from `ln ln s` in log form so that arguments up
/// to `s = exp(exp(10³⁰⁰))` are reachable.
pub fn damping_integrand(spec: &KineticSpec, r: u32, s: Tower, w: f64) -> Result<f64> {
    check_param("r", r as f64, (1..=MAX_TOWER).contains(&r), "an integer in 1..=3")?;
    let ln_s = s.ln()?;
    if ln_s.is_representable() && ln_s.to_f64() <= 200.0 {
        let x = s.to_f64();
        let mut p = 1.0;
        for i in 1..=r {
            p *= iter_log(i, x)?;
        }
        return Ok(-spec.eval(x, w) * p / (x * x));
    }
    if spec.is_zero() {
        return Ok(0.0);
    }
    let lnln = s.ln_ln()?;
    // logs[j] = ln^[j] s for j ≥ 2
    let mut logs = [f64::NAN; 5];
    logs[2] = lnln;
    logs[3] = math::ln(logs[2]);
    logs[4] = math::ln(logs[3]);
    Ok(asymptotic_integrand(spec, r, &logs, w))
}

/// The integrand from `ln^[j] s`, `j ≥ 2`. The exponents of
/// `Π ln^[i] s` and of `d(s)/s` are combined per iterate before summing;
/// they cancel exactly in the critical case `r = k`.
fn asymptotic_integrand(spec: &KineticSpec, r: u32, logs: &[f64; 5], w: f64) -> f64 {
    let (c0, mut c) = spec.ln_damping_over_s_asymptotic();
    for cj in &mut c[2..=r as usize + 1] {
        *cj += 1.0;
    }
    let ln_p: f64 = logs[2..=r as usize + 1].iter().sum();
    let mut exponent = c0;
    for j in 2..5 {
        if c[j] != 0.0 {
            exponent += c[j] * logs[j];
        }
    }
    let ln_s = math::exp(logs[2]);
    math::exp(exponent) - spec.growth(w) * math::exp(ln_p - ln_s)
}

/// Estimates `μ_r = liminf_{s→∞} inf_{0≤w≤w_max} −f(s,w) Π ln^[i]s / s²` as
/// the infimum over the tail half of `schedule`.
///
/// The integrand is affine in `w`, so the inner infimum is taken over the
/// two endpoints.
pub fn mu_r_estimate(
    kinetics: &Kinetics,
    r: u32,
    w_max: f64,
    schedule: &TailSchedule,
    opts: &MuOptions,
) -> Result<MuEstimate> {
    check_param("w_max", w_max, w_max >= 0.0 && w_max.is_finite(), ">= 0")?;
    let threshold = Tower::from_f64(e_tower(r)?);
    let first = schedule.points.first().ok_or(Error::InvalidParameter {
        name: "schedule",
        value: 0.0,
        expected: "a nonempty schedule",
    })?;
    if first.partial_cmp(&threshold) != Some(core::cmp::Ordering::Greater) {
        return Err(Error::Domain {
            iterate: r,
            value: first.to_f64(),
        });
    }
    let spec = kinetics.spec();
    if spec.is_zero() {
        return Ok(MuEstimate::Finite(0.0));
    }
    let mut values = Vec::with_capacity(schedule.points.len());
    for &s in &schedule.points {
        let a = damping_integrand(spec, r, s, 0.0)?;
        let b = damping_integrand(spec, r, s, w_max)?;
        values.push(a.min(b));
    }
    let tail = &values[values.len() / 2..];
    let window = &tail[tail.len().saturating_sub(opts.growth_window)..];
    let diverging =
        window.iter().all(|&v| v > opts.divergence_threshold) && window.windows(2).all(|p| p[1] >= p[0]);
    if diverging {
        return Ok(MuEstimate::Infinite);
    }
    Ok(MuEstimate::Finite(
        tail.iter().copied().fold(f64::INFINITY, f64::min) + 0.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::E;

    struct XorShift(u64);
    impl XorShift {
        fn next(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn all_specs() -> Vec<KineticSpec> {
        vec![
            KineticSpec::Logistic { mu: 0.7 },
            KineticSpec::SubLogPow {
                a: 1.5,
                b: 0.4,
                gamma: 0.5,
            },
            KineticSpec::SubLogPow {
                a: -0.3,
                b: 2.0,
                gamma: 0.9,
            },
            KineticSpec::SubLogLogLog { a: 2.0, b: 0.3 },
            KineticSpec::IterLog { k: 1, mu: 1.0 },
            KineticSpec::IterLog { k: 2, mu: 0.5 },
            KineticSpec::IterLog { k: 3, mu: 2.0 },
        ]
    }

    #[test]
    fn iter_log_examples() {
        assert_eq!(iter_log(0, 5.0).unwrap(), 5.0);
        for m in 1..=3 {
            let v = iter_log(m, e_tower(m).unwrap()).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "m={m}: {v}");
        }
        assert!((iter_log(2, E.exp()).unwrap() - 1.0).abs() < 1e-12);
        assert!(iter_log(2, 0.5).is_err());
        assert!(iter_log(1, 0.5).unwrap() < 0.0);
        assert!(iter_log(1, 0.0).is_err());
    }

    #[test]
    fn e_tower_examples() {
        assert_eq!(e_tower(0).unwrap(), 1.0);
        assert!((e_tower(1).unwrap() - core::f64::consts::E).abs() < 1e-15);
        assert!((e_tower(3).unwrap() - 3814279.1).abs() < 0.1);
        assert!((e_tower(3).unwrap() / 1f64.exp().exp().exp() - 1.0).abs() < 1e-14);
        assert!(matches!(e_tower(4), Err(Error::Overflow { .. })));
    }

    #[test]
    fn eval_examples() {
        assert_eq!(KineticSpec::Logistic { mu: 2.0 }.eval(1.0, 0.0), 0.0);
        let s = E - 1.0;
        let f = KineticSpec::IterLog { k: 1, mu: 1.0 }.eval(s, 0.0);
        assert!((f - (E - 1.0) * (1.0 - (E - 1.0))).abs() < 1e-14);
        assert_eq!(KineticSpec::Zero.eval(3.0, 0.2), 0.0);
    }

    #[test]
    fn sources_vanish_at_zero_and_stay_bounded_near_it() {
        for spec in all_specs() {
            assert_eq!(spec.eval(0.0, 0.3), 0.0);
            let f = spec.eval(1e-12, 0.3);
            assert!(f.abs() < 1e-9, "{spec:?}: {f}");
        }
    }

    #[test]
    fn validation_rejects_out_of_range() {
        assert!(KineticSpec::SubLogPow {
            a: 1.0,
            b: 1.0,
            gamma: 1.5
        }
        .validate()
        .is_err());
        assert!(KineticSpec::SubLogPow {
            a: 1.0,
            b: 0.0,
            gamma: 0.5
        }
        .validate()
        .is_err());
        assert!(KineticSpec::Logistic { mu: -1.0 }.validate().is_err());
        assert!(KineticSpec::IterLog { k: 0, mu: 1.0 }.validate().is_err());
        assert!(KineticSpec::IterLog { k: 4, mu: 1.0 }.validate().is_err());
        assert!(KineticSpec::SubLogLogLog { a: f64::NAN, b: 1.0 }
            .validate()
            .is_err());
        let err = Kinetics::new(KineticSpec::SubLogPow {
            a: 1.0,
            b: 1.0,
            gamma: 1.5,
        })
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "gamma", .. }));
    }

    #[test]
    fn source_cap_holds_on_random_samples() {
        let mut rng = XorShift(0x9e3779b97f4a7c15);
        for spec in all_specs() {
            let k = Kinetics::new(spec).unwrap();
            let cap = k.cap().unwrap();
            for _ in 0..10_000 {
                let s = 10f64.powf(-6.0 + 12.0 * rng.next());
                let w = 5.0 * rng.next();
                let f = k.eval(s, w);
                assert!(f <= cap.a - cap.b * s + 1e-12, "{spec:?} s={s} w={w}");
            }
        }
    }

    #[test]
    fn shifted_iter_log_derivatives_match_finite_differences() {
        for m in 1..=3 {
            for j in 0..1000 {
                let z = 10f64.powf(-3.0 + 9.0 * j as f64 / 999.0);
                let shift = e_tower(m).unwrap();
                let h = |z: f64| iter_log(m, z + shift).unwrap();
                let (_, d1, d2) = shifted_iter_log(m, z).unwrap();
                let dz = 1e-4 * (z + shift);
                let fd1 = (h(z + dz) - h(z - dz)) / (2.0 * dz);
                assert!(fd1 > 0.0, "h' not positive at m={m} z={z}");
                assert!((fd1 - d1).abs() <= 1e-6 * d1, "m={m} z={z}");
                let fd2 = (h(z + dz) - 2.0 * h(z) + h(z - dz)) / (dz * dz);
                assert!((fd2 - d2).abs() <= 1e-3 * d2.abs() + 1e-9 * d1, "m={m} z={z}");
            }
        }
    }

    #[test]
    fn dissipation_weight_is_positive_and_consistent() {
        for m in 1..=3 {
            let e_m1 = e_tower(m - 1).unwrap();
            for j in 0..1000 {
                let z = 10f64.powf(-3.0 + 12.0 * j as f64 / 999.0);
                let w = dissipation_weight(m, z).unwrap();
                let (_, d1, d2) = shifted_iter_log(m, z).unwrap();
                let y = z + e_tower(m).unwrap();
                assert!((w - (2.0 * d1 + y * d2)).abs() <= 1e-12 * d1);
                // weight · Π ln^[i] y ≥ 1 − (m−1)/e^[m−1] > 0
                let prod = 1.0 / d1;
                assert!(w * prod >= 1.0 - (m - 1) as f64 / e_m1 - 1e-12);
                assert!(w > 0.0);
            }
        }
    }

    #[test]
    fn integrand_paths_agree() {
        // ln s = 200 separates the direct and log-form evaluations; compare
        // both on either side of the switch.
        for spec in all_specs() {
            for r in 1..=3 {
                for ln_s in [60.0, 120.0, 190.0] {
                    let s = Tower::exp_iter(1, ln_s);
                    let direct = damping_integrand(&spec, r, s, 0.4).unwrap();
                    let x = s.to_f64();
                    let lnln = x.ln().ln();
                    let mut logs = [f64::NAN; 5];
                    logs[2] = lnln;
                    logs[3] = logs[2].ln();
                    logs[4] = logs[3].ln();
                    let asym = asymptotic_integrand(&spec, r, &logs, 0.4);
                    assert!(
                        (direct - asym).abs() <= 1e-10 * direct.abs().max(1e-300),
                        "{spec:?} r={r} ln s={ln_s}: {direct} vs {asym}"
                    );
                }
            }
        }
    }

    fn mu(spec: KineticSpec, r: u32, schedule: TailSchedule) -> MuEstimate {
        mu_r_estimate(
            &Kinetics::new(spec).unwrap(),
            r,
            0.8,
            &schedule,
            &MuOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn mu_zero_source_is_exactly_zero() {
        for r in 1..=3 {
            assert_eq!(
                mu(KineticSpec::Zero, r, TailSchedule::extended(r).unwrap()),
                MuEstimate::Finite(0.0)
            );
        }
    }

    #[test]
    fn mu_logistic_and_sublogistic_are_infinite() {
        for spec in [
            KineticSpec::Logistic { mu: 0.2 },
            KineticSpec::SubLogPow {
                a: 1.0,
                b: 1.0,
                gamma: 0.5,
            },
            KineticSpec::SubLogLogLog { a: 1.0, b: 1.0 },
        ] {
            assert!(
                mu(spec, 1, TailSchedule::extended(1).unwrap()).is_infinite(),
                "{spec:?}"
            );
        }
    }

    #[test]
    fn mu_iter_log_table() {
        for k in 1..=3u32 {
            let m = 1.3;
            let spec = KineticSpec::IterLog { k, mu: m };
            let at_k = mu(spec, k, TailSchedule::standard(k).unwrap()).value();
            assert!((at_k - m).abs() <= 0.05 * m, "k={k}: {at_k}");
            let mut prev = f64::NEG_INFINITY;
            for r in 1..=k {
                let v = mu(spec, r, TailSchedule::extended(r).unwrap()).value();
                if r < k {
                    assert!(v.abs() < 1e-2 * m, "k={k} r={r}: {v}");
                } else {
                    assert!((v - m).abs() <= 1e-6 * m, "k={k} r={r}: {v}");
                }
                assert!(v >= prev);
                prev = v;
            }
        }
        assert!(mu(
            KineticSpec::IterLog { k: 1, mu: 1.0 },
            2,
            TailSchedule::extended(2).unwrap()
        )
        .is_infinite());
    }

    #[test]
    fn schedule_below_tower_is_rejected() {
        let k = Kinetics::new(KineticSpec::IterLog { k: 3, mu: 1.0 }).unwrap();
        let s = TailSchedule::geometric(1e2, 1e12, 64).unwrap();
        assert!(mu_r_estimate(&k, 3, 0.0, &s, &MuOptions::default()).is_err());
    }

    #[test]
    fn m1_examples() {
        assert_eq!(m1_compute(&Kinetics::zero(), 0.7, 3.0, 1.0).unwrap(), 0.7);

        // Logistic μ: sup_s μs(1−s) + ηs = (μ+η)²/(4μ), so the objective is
        // (μ+η)²/(4μη), minimized at η = μ = b' with value 1.
        for m in [0.5, 1.0, 3.0] {
            let k = Kinetics::new(KineticSpec::Logistic { mu: m }).unwrap();
            let closed = (0..=4000)
                .map(|j| {
                    let eta = m * 10f64.powf(-4.0 * j as f64 / 4000.0);
                    (m + eta).powi(2) / (4.0 * m * eta)
                })
                .fold(f64::INFINITY, f64::min);
            let got = m1_compute(&k, 0.25, 2.0, 0.5).unwrap();
            assert!((got - (0.25 + 2.0 * closed)).abs() < 1e-8, "mu={m}: {got}");
        }

        let k = Kinetics::new(KineticSpec::IterLog { k: 2, mu: 1.0 }).unwrap();
        let with_mass = m1_compute(&k, 1.5, 1.0, 0.5).unwrap();
        let without = m1_compute(&k, 0.0, 1.0, 0.5).unwrap();
        assert!(without >= 0.0);
        assert!((with_mass - without - 1.5).abs() < 1e-12);
    }

    #[test]
    fn m1_matches_brute_force() {
        // Dense (η, s) grid search as an independent oracle.
        for spec in [
            KineticSpec::SubLogPow {
                a: 1.5,
                b: 0.4,
                gamma: 0.5,
            },
            KineticSpec::SubLogLogLog { a: 2.0, b: 0.3 },
            KineticSpec::IterLog { k: 1, mu: 0.5 },
        ] {
            let k = Kinetics::new(spec).unwrap();
            let b = k.cap().unwrap().b;
            let mut best = f64::INFINITY;
            for je in 0..=600 {
                let eta = b * 10f64.powf(-6.0 * je as f64 / 600.0);
                let mut sup = 0.0f64;
                for js in 0..=3000 {
                    let s = 10f64.powf(-4.0 + 12.0 * js as f64 / 3000.0);
                    sup = sup.max(spec.eval(s, 0.0) + eta * s);
                }
                best = best.min(sup / eta);
            }
            let got = m1_compute(&k, 0.0, 1.0, 1.0).unwrap();
            assert!((got - best).abs() <= 1e-4 * best, "{spec:?}: {got} vs {best}");
        }
    }

    #[test]
    fn negative_growth_gives_zero_cap_term() {
        let k = Kinetics::new(KineticSpec::SubLogPow {
            a: -0.5,
            b: 1.0,
            gamma: 0.5,
        })
        .unwrap();
        let m1 = m1_compute(&k, 2.0, 1.0, 1.0).unwrap();
        assert!((2.0..2.0 + 1e-6).contains(&m1), "{m1}");
    }
}
