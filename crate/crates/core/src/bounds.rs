//! Finite-sample bound calculators for LSTD(λ)-RP.
//!
//! Every function evaluates a closed-form expression exactly as written, in
//! `f64`. The expressions are products and sums of positive terms, so no
//! cancellation occurs and double precision is ample even where the mixing
//! complexity term is large and `1/n` is small.
//!
//! The lower-order term `h(n, d, δ) = Õ((d/n) log(1/δ))` of the estimation and
//! total bounds has no published constant; it is left out and every report
//! carries `h_term_omitted = true`.
//!
//! Each bound has a strict form, which refuses inputs that violate the
//! hypotheses under which it holds, and an `_unchecked` form that only refuses
//! inputs where the expression itself is undefined.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponential β-mixing coefficients: `β(m) ≤ β₀ exp(−β₁ m^κ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingParams {
    pub beta0: f64,
    pub beta1: f64,
    pub kappa: f64,
}

impl Default for MixingParams {
    fn default() -> Self {
        Self {
            beta0: 1.0,
            beta1: 1.0,
            kappa: 1.0,
        }
    }
}

impl MixingParams {
    pub fn new(beta0: f64, beta1: f64, kappa: f64) -> Result<Self> {
        let m = Self { beta0, beta1, kappa };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta0", self.beta0), ("beta1", self.beta1), ("kappa", self.kappa)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("mixing parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Everything the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Trajectory length.
    pub n: u64,
    /// Projected dimension d.
    pub d: usize,
    /// Ambient dimension D.
    pub big_d: usize,
    pub delta: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Per-coordinate feature bound L.
    pub feature_bound: f64,
    /// Smallest eigenvalue of the ambient Gram matrix.
    pub nu_f: f64,
    pub v_max: f64,
    pub mixing: MixingParams,
    /// `m(Π_F V)`.
    pub m_pi_f_v: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if self.d == 0 || self.big_d == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        for (name, v) in [("L", self.feature_bound), ("nu_F", self.nu_f), ("V_max", self.v_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.m_pi_f_v.is_finite() && self.m_pi_f_v >= 0.0) {
            return Err(Error::invalid("m(Pi_F V) must be nonnegative"));
        }
        self.mixing.validate()
    }
}

/// `m_n^λ = ⌈log(n−1) / log(1/(λγ))⌉` for `λ > 0`, and 0 for `λ = 0`.
///
/// A ratio within a few ulps of an integer is taken as that integer, so exact
/// powers `n − 1 = (λγ)^{−k}` give `k`.
pub fn m_n_lambda(n: u64, lambda: f64, gamma: f64) -> Result<u64> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    let lg = lambda * gamma;
    if !(0.0..1.0).contains(&lg) || lambda < 0.0 {
        return Err(Error::domain("m_n^lambda", format!("requires 0 <= lambda*gamma < 1, got {lg}")));
    }
    if lambda == 0.0 || lg == 0.0 || n == 2 {
        return Ok(0);
    }
    let ratio = ((n - 1) as f64).ln() / (1.0 / lg).ln();
    let nearest = ratio.round();
    let value = if (ratio - nearest).abs() <= 8.0 * f64::EPSILON * ratio.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    Ok(value as u64)
}

/// `ξ(n, d, δ) = 1 + sqrt((8/d) log(n/δ))`.
pub fn xi(n: f64, d: usize, delta: f64) -> Result<f64> {
    let ratio = n / delta;
    if !(ratio >= 1.0) || d == 0 {
        return Err(Error::domain("xi", format!("requires n/delta >= 1 and d > 0, got n/delta = {ratio}")));
    }
    Ok(1.0 + (8.0 / d as f64 * ratio.ln()).sqrt())
}

/// `η(d, D, δ) = (1 − sqrt(d/D) − sqrt(2 log(2/δ)/D))²`; an error when the
/// inner expression is not positive.
pub fn eta(d: usize, big_d: usize, delta: f64) -> Result<f64> {
    let inner = 1.0 - (d as f64 / big_d as f64).sqrt() - (2.0 * (2.0 / delta).ln() / big_d as f64).sqrt();
    if !(inner > 0.0) {
        return Err(Error::domain(
            "eta",
            format!("1 - sqrt(d/D) - sqrt(2 log(2/delta)/D) = {inner} <= 0 (d = {d}, D = {big_d}, delta = {delta}); D is too small"),
        ));
    }
    Ok(inner * inner)
}

/// `Λ(n, δ) = log(8n²/δ) + log(max{4e², nβ₀})`.
pub fn log_confidence(n: f64, delta: f64, mixing: &MixingParams) -> f64 {
    let e2 = std::f64::consts::E * std::f64::consts::E;
    (8.0 * n * n / delta).ln() + (4.0 * e2).max(n * mixing.beta0).ln()
}

/// `I(n, δ) = 32 Λ(n, δ) max{Λ(n, δ)/β₁, 1}^{1/κ}`.
pub fn mixing_complexity(n: f64, delta: f64, mixing: &MixingParams) -> f64 {
    let lam = log_confidence(n, delta, mixing);
    32.0 * lam * (lam / mixing.beta1).max(1.0).powf(1.0 / mixing.kappa)
}

/// `Υ(n, δ) = (log((4 + nβ₀)/δ))^{1+1/κ} β₁^{−1/κ}`, the form used by the
/// approximation bound.
pub fn deviation_factor(n: f64, delta: f64, mixing: &MixingParams) -> f64 {
    let l = ((4.0 + n * mixing.beta0) / delta).ln();
    l.powf(1.0 + 1.0 / mixing.kappa) * mixing.beta1.powf(-1.0 / mixing.kappa)
}

/// `Υ(n, δ) = [log(1/δ) + log(4 + nβ₀)] · ([log(1/δ) + log(4 + nβ₀)]/β₁)^{1/κ}`,
/// the grouping used by the β-mixing Hoeffding radius.
pub fn deviation_factor_product_form(n: f64, delta: f64, mixing: &MixingParams) -> f64 {
    let l = (1.0 / delta).ln() + (4.0 + n * mixing.beta0).ln();
    l * (l / mixing.beta1).powf(1.0 / mixing.kappa)
}

/// `(2 M_h / sqrt(n)) sqrt(Υ(n, δ))`: with probability `1 − δ`, the empirical
/// mean of a function bounded by `M_h` along a stationary β-mixing path of
/// length `n` is within this radius of its expectation.
pub fn mixing_hoeffding_radius(n: u64, delta: f64, m_h: f64, mixing: &MixingParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) || m_h < 0.0 {
        return Err(Error::invalid("delta must lie in (0, 1) and M_h must be nonnegative"));
    }
    mixing.validate()?;
    let nf = n as f64;
    Ok(2.0 * m_h / nf.sqrt() * deviation_factor_product_form(nf, delta, mixing).sqrt())
}

/// `(1 − λγ)/(1 − γ)`.
pub fn approximation_coefficient(lambda: f64, gamma: f64) -> f64 {
    (1.0 - lambda * gamma) / (1.0 - gamma)
}

/// `(1 − λγ)/sqrt((1 − γ)(1 + γ − 2λγ))`.
pub fn improved_approximation_coefficient(lambda: f64, gamma: f64) -> f64 {
    (1.0 - lambda * gamma) / ((1.0 - gamma) * (1.0 + gamma - 2.0 * lambda * gamma)).sqrt()
}

/// `4√2 / sqrt(1 − γ²)`, the coefficient of the trace-free LSTD-RP bound.
pub fn lstd_rp_approximation_coefficient(gamma: f64) -> f64 {
    4.0 * 2f64.sqrt() / (1.0 - gamma * gamma).sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxCoefficient {
    #[default]
    Standard,
    Improved,
}

impl ApproxCoefficient {
    pub fn value(self, lambda: f64, gamma: f64) -> f64 {
        match self {
            ApproxCoefficient::Standard => approximation_coefficient(lambda, gamma),
            ApproxCoefficient::Improved => improved_approximation_coefficient(lambda, gamma),
        }
    }
}

/// `D > d + 2 sqrt(2d log(c/δ)) + 2 log(c/δ)`.
pub fn ambient_gap_holds(d: usize, big_d: usize, delta: f64, c: f64) -> bool {
    let l = (c / delta).ln();
    big_d as f64 > d as f64 + 2.0 * (2.0 * d as f64 * l).sqrt() + 2.0 * l
}

/// `d ≥ 15 log(c n/δ)`.
pub fn projected_dim_holds(d: usize, n: u64, delta: f64, c: f64) -> bool {
    d as f64 >= 15.0 * (c * n as f64 / delta).ln()
}

fn gap_violation(inputs: &BoundInputs, c: f64) -> Option<String> {
    (!ambient_gap_holds(inputs.d, inputs.big_d, inputs.delta, c)).then(|| {
        format!(
            "D > d + 2 sqrt(2d log({c}/delta)) + 2 log({c}/delta) fails for d = {}, D = {}, delta = {}",
            inputs.d, inputs.big_d, inputs.delta
        )
    })
}

fn dim_violation(inputs: &BoundInputs, c: f64) -> Option<String> {
    (!projected_dim_holds(inputs.d, inputs.n, inputs.delta, c)).then(|| {
        format!(
            "d >= 15 log({c} n/delta) fails for d = {}, n = {}, delta = {} (needs d >= {:.2})",
            inputs.d,
            inputs.n,
            inputs.delta,
            15.0 * (c * inputs.n as f64 / inputs.delta).ln()
        )
    })
}

fn strict(quantity: &'static str, violations: Vec<String>) -> Result<()> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::domain(quantity, violations.join("; ")))
    }
}

/// Hypotheses of the sample-size result (invertibility of `Â`).
pub fn invertibility_violations(inputs: &BoundInputs) -> Vec<String> {
    gap_violation(inputs, 4.0).into_iter().collect()
}

/// Hypotheses of the estimation bound.
pub fn estimation_violations(inputs: &BoundInputs) -> Vec<String> {
    gap_violation(inputs, 4.0).into_iter().chain(dim_violation(inputs, 4.0)).collect()
}

/// Hypotheses of the approximation bound.
pub fn approximation_violations(inputs: &BoundInputs) -> Vec<String> {
    dim_violation(inputs, 8.0).into_iter().collect()
}

/// Hypotheses of the total bound.
pub fn total_violations(inputs: &BoundInputs) -> Vec<String> {
    gap_violation(inputs, 8.0).into_iter().chain(dim_violation(inputs, 16.0)).collect()
}

/// Left-hand side of the sample-size condition at trajectory length `n`:
///
/// ```text
/// 2dL² / ((1−γ) ν_F η(d,D,δ/2)) · [ 2ξ(n,d,δ/4)/sqrt(n−1) · sqrt((1+m_n^λ) I(n−1,δ/2))
///                                  + 2ξ(n,d,δ/4) m_n^λ/(n−1) + 1/((1−λγ)(n−1)) ]
/// ```
///
/// `n₀(δ)` is the smallest `n` at which this drops below 1.
pub fn invertibility_lhs(inputs: &BoundInputs, n: u64) -> Result<f64> {
    let inp = BoundInputs { n, ..*inputs };
    inp.validate()?;
    let (g, lam) = (inp.gamma, inp.lambda);
    let d = inp.d as f64;
    let l2 = inp.feature_bound * inp.feature_bound;
    let prefactor = 2.0 * d * l2 / ((1.0 - g) * inp.nu_f * eta(inp.d, inp.big_d, inp.delta / 2.0)?);
    let nm1 = (n - 1) as f64;
    let m = m_n_lambda(n, lam, g)? as f64;
    let x = xi(n as f64, inp.d, inp.delta / 4.0)?;
    let i = mixing_complexity(nm1, inp.delta / 2.0, &inp.mixing);
    let bracket = 2.0 * x / nm1.sqrt() * ((1.0 + m) * i).sqrt()
        + 2.0 * x * m / nm1
        + 1.0 / ((1.0 - lam * g) * nm1);
    Ok(prefactor * bracket)
}

/// Outcome of the `n₀` search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSize {
    Found(u64),
    NotFoundBelowCap(u64),
}

impl SampleSize {
    pub fn found(self) -> Option<u64> {
        match self {
            SampleSize::Found(n) => Some(n),
            SampleSize::NotFoundBelowCap(_) => None,
        }
    }
}

pub const DEFAULT_N0_CAP: u64 = 1_000_000_000;

const N0_LINEAR_PREFIX: u64 = 10_000;

/// Smallest `n ≤ cap` with [`invertibility_lhs`] `< 1`.
///
/// Every `n` up to 10⁴ is scanned. Beyond that the search walks the runs of
/// constant `m_n^λ` in order; inside a run the expression is decreasing in `n`
/// (only polylogarithmic factors grow, against `1/sqrt(n−1)`), so each run is
/// tested at its last point and bisected when that point qualifies.
pub fn n0(inputs: &BoundInputs, cap: u64) -> Result<SampleSize> {
    strict("n0", invertibility_violations(inputs))?;
    let cap = cap.max(2);
    let lhs = |n: u64| invertibility_lhs(inputs, n);

    let linear_end = cap.min(N0_LINEAR_PREFIX);
    for n in 2..=linear_end {
        if lhs(n)? < 1.0 {
            return Ok(SampleSize::Found(n));
        }
    }

    let (lam, g) = (inputs.lambda, inputs.gamma);
    let mut start = linear_end + 1;
    while start <= cap {
        let k = m_n_lambda(start, lam, g)?;
        let end = run_end(start, k, cap, lam, g)?;
        if lhs(end)? < 1.0 {
            let (mut lo, mut hi) = (start, end);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if lhs(mid)? < 1.0 {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            return Ok(SampleSize::Found(lo));
        }
        if end == cap {
            break;
        }
        start = end + 1;
    }
    Ok(SampleSize::NotFoundBelowCap(cap))
}

/// Last `n ≤ cap` with `m_n^λ = k`, given `m_start^λ = k`.
fn run_end(start: u64, k: u64, cap: u64, lambda: f64, gamma: f64) -> Result<u64> {
    let lg = lambda * gamma;
    if lambda == 0.0 || lg == 0.0 {
        return Ok(cap);
    }
    // m_n = k  <=>  n - 1 <= (1/λγ)^k
    let guess = ((1.0 / lg).ln() * k as f64).exp();
    let mut end = if guess >= (cap - 1) as f64 { cap } else { (guess as u64 + 1).clamp(start, cap) };
    while end > start && m_n_lambda(end, lambda, gamma)? > k {
        end -= 1;
    }
    while end < cap && m_n_lambda(end + 1, lambda, gamma)? == k {
        end += 1;
    }
    Ok(end)
}

/// Explicit part of the estimation bound,
/// `4 V_max d L² ξ(n,d,δ/4) sqrt((m_n^λ+1) I(n−1,δ/4)) / (sqrt(n−1)(1−γ) ν_F η(d,D,δ/2))`.
pub fn estimation_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    strict("estimation bound", estimation_violations(inputs))?;
    estimation_bound_unchecked(inputs)
}

pub fn estimation_bound_unchecked(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    estimation_term(inputs, inputs.delta / 4.0, inputs.delta / 4.0, inputs.delta / 2.0)
}

fn estimation_term(inputs: &BoundInputs, delta_xi: f64, delta_i: f64, delta_eta: f64) -> Result<f64> {
    let n = inputs.n;
    let nm1 = (n - 1) as f64;
    let m = m_n_lambda(n, inputs.lambda, inputs.gamma)? as f64;
    let x = xi(n as f64, inputs.d, delta_xi)?;
    let i = mixing_complexity(nm1, delta_i, &inputs.mixing);
    let e = eta(inputs.d, inputs.big_d, delta_eta)?;
    let l2 = inputs.feature_bound * inputs.feature_bound;
    Ok(4.0 * inputs.v_max * inputs.d as f64 * l2 * x * ((m + 1.0) * i).sqrt()
        / (nm1.sqrt() * (1.0 - inputs.gamma) * inputs.nu_f * e))
}

fn approximation_term(
    inputs: &BoundInputs,
    approx_error_f: f64,
    log_scale: f64,
    delta_upsilon: f64,
    coefficient: ApproxCoefficient,
) -> Result<f64> {
    if !(approx_error_f.is_finite() && approx_error_f >= 0.0) {
        return Err(Error::invalid("approximation error in F must be nonnegative"));
    }
    let nf = inputs.n as f64;
    let spread = (8.0 / inputs.d as f64 * (log_scale * nf / inputs.delta).ln()).sqrt();
    let ups = deviation_factor(nf, delta_upsilon, &inputs.mixing);
    let inner = approx_error_f + spread * (1.0 + 2.0 * ups.sqrt() / nf.sqrt()) * inputs.m_pi_f_v;
    Ok(coefficient.value(inputs.lambda, inputs.gamma) * inner)
}

/// `c(λ,γ) [‖V − Π_F V‖_μ + sqrt((8/d) log(8n/δ)) (1 + 2 sqrt(Υ(n,δ/2))/sqrt(n)) m(Π_F V)]`.
pub fn approximation_bound(inputs: &BoundInputs, approx_error_f: f64, coefficient: ApproxCoefficient) -> Result<f64> {
    inputs.validate()?;
    strict("approximation bound", approximation_violations(inputs))?;
    approximation_term(inputs, approx_error_f, 8.0, inputs.delta / 2.0, coefficient)
}

pub fn approximation_bound_unchecked(
    inputs: &BoundInputs,
    approx_error_f: f64,
    coefficient: ApproxCoefficient,
) -> Result<f64> {
    inputs.validate()?;
    approximation_term(inputs, approx_error_f, 8.0, inputs.delta / 2.0, coefficient)
}

/// All evaluated quantities of the total bound. The intermediate quantities are
/// reported at the arguments the total bound uses (`ξ(n,d,δ/8)`,
/// `I(n−1,δ/8)`, `η(d,D,δ/4)`, `Υ(n,δ/4)`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub approx_error_f: f64,
    pub m_n_lambda: u64,
    pub xi: f64,
    pub eta: f64,
    pub log_confidence: f64,
    pub mixing_complexity: f64,
    pub deviation_factor: f64,
    pub n0: Option<u64>,
    pub n0_cap: u64,
    pub estimation_bound: f64,
    pub approximation_bound: f64,
    pub total_bound: f64,
    pub h_term_omitted: bool,
    /// Hypotheses that fail for these inputs; empty for a strict evaluation.
    pub violations: Vec<String>,
}

/// The total-error bound with all its components; refuses inputs that violate
/// its hypotheses.
pub fn total_bound(inputs: &BoundInputs, approx_error_f: f64) -> Result<BoundReport> {
    inputs.validate()?;
    strict("total bound", total_violations(inputs))?;
    total_bound_unchecked(inputs, approx_error_f)
}

/// The estimation and approximation parts of the total-error bound, without
/// the `n₀` search or the intermediate quantities.
pub fn total_components_unchecked(inputs: &BoundInputs, approx_error_f: f64) -> Result<(f64, f64)> {
    inputs.validate()?;
    let delta = inputs.delta;
    let estimation = estimation_term(inputs, delta / 8.0, delta / 8.0, delta / 4.0)?;
    let approximation = approximation_term(inputs, approx_error_f, 16.0, delta / 4.0, ApproxCoefficient::Standard)?;
    Ok((estimation, approximation))
}

/// The total-error bound evaluated wherever the expression is defined, with
/// failing hypotheses listed in the report.
pub fn total_bound_unchecked(inputs: &BoundInputs, approx_error_f: f64) -> Result<BoundReport> {
    let (estimation, approximation) = total_components_unchecked(inputs, approx_error_f)?;
    let delta = inputs.delta;
    let nf = inputs.n as f64;
    let n0 = n0(inputs, DEFAULT_N0_CAP).ok().and_then(SampleSize::found);
    Ok(BoundReport {
        inputs: *inputs,
        approx_error_f,
        m_n_lambda: m_n_lambda(inputs.n, inputs.lambda, inputs.gamma)?,
        xi: xi(nf, inputs.d, delta / 8.0)?,
        eta: eta(inputs.d, inputs.big_d, delta / 4.0)?,
        log_confidence: log_confidence(nf - 1.0, delta / 8.0, &inputs.mixing),
        mixing_complexity: mixing_complexity(nf - 1.0, delta / 8.0, &inputs.mixing),
        deviation_factor: deviation_factor(nf, delta / 4.0, &inputs.mixing),
        n0,
        n0_cap: DEFAULT_N0_CAP,
        estimation_bound: estimation,
        approximation_bound: approximation,
        total_bound: estimation + approximation,
        h_term_omitted: true,
        violations: total_violations(inputs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> MixingParams {
        MixingParams::default()
    }

    #[test]
    fn m_n_lambda_examples() {
        assert_eq!(m_n_lambda(1000, 0.0, 0.9).unwrap(), 0);
        assert_eq!(m_n_lambda(101, 1.0, 0.5).unwrap(), 7);
        assert_eq!(m_n_lambda(2, 0.9, 0.9).unwrap(), 0);
        assert_eq!(m_n_lambda(65, 1.0, 0.5).unwrap(), 6);
        assert_eq!(m_n_lambda(66, 1.0, 0.5).unwrap(), 7);
        assert!(m_n_lambda(1, 0.5, 0.5).is_err());
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(0.1, 5, 0.1).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert!((xi(0.1 * e, 8, 0.1).unwrap() - 2.0).abs() < 1e-15);
        assert!(xi(0.01, 5, 0.1).is_err());
    }

    #[test]
    fn eta_domain() {
        assert!(eta(1, 1_000_000_000, 0.5).unwrap() > 0.99);
        assert!(matches!(eta(10, 12, 0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn branch_selection() {
        let m = MixingParams::new(1e-9, 1e6, 2.0).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        let want = (8.0 * 100.0_f64.powi(2) / 0.1).ln() + 2.0 + 4f64.ln();
        assert!((log_confidence(100.0, 0.1, &m) - want).abs() < 1e-12);
        assert!(((4.0 * e2).ln() - 2.0 - 4f64.ln()).abs() < 1e-15);
        assert!((mixing_complexity(100.0, 0.1, &m) - 32.0 * want).abs() < 1e-10);
        assert!(MixingParams::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn approximation_coefficients() {
        assert!((approximation_coefficient(1.0, 0.9) - 1.0).abs() < 1e-15);
        assert!((approximation_coefficient(0.0, 0.9) - 10.0).abs() < 1e-12);
        assert!((lstd_rp_approximation_coefficient(0.0) - 4.0 * 2f64.sqrt()).abs() < 1e-15);
        for lam in [0.0, 0.3, 0.7, 1.0] {
            assert!(improved_approximation_coefficient(lam, 0.9) <= approximation_coefficient(lam, 0.9) + 1e-12);
        }
    }

    #[test]
    fn radius_edge_cases() {
        assert_eq!(mixing_hoeffding_radius(100, 0.1, 0.0, &unit()).unwrap(), 0.0);
        let r1 = mixing_hoeffding_radius(1_000_000, 0.1, 1.0, &unit()).unwrap();
        let r4 = mixing_hoeffding_radius(4_000_000, 0.1, 1.0, &unit()).unwrap();
        assert!(r4 / r1 < 0.75);
        assert!(mixing_hoeffding_radius(0, 0.1, 1.0, &unit()).is_err());
    }

    fn ring_inputs() -> BoundInputs {
        BoundInputs {
            n: 10_000,
            d: 4,
            big_d: 64,
            delta: 0.1,
            gamma: 0.9,
            lambda: 0.5,
            feature_bound: 1.0,
            nu_f: 0.2,
            v_max: 10.0,
            mixing: unit(),
            m_pi_f_v: 3.0,
        }
    }

    fn close(got: f64, want: f64, rel: f64) {
        assert!((got - want).abs() <= rel * want.abs(), "got {got}, want {want}");
    }

    #[test]
    fn frozen_reference_values() {
        close(xi(1e4, 128, 0.05).unwrap(), 1.873429756961391748, 1e-14);
        close(eta(100, 10_000, 0.1).unwrap(), 0.7665397035024561, 1e-14);
        close(log_confidence(1000.0, 0.1, &unit()), 25.10529247162029, 1e-14);
        close(mixing_complexity(1000.0, 0.1, &unit()), 20168.82272273902, 1e-13);
        close(mixing_hoeffding_radius(10_000, 0.05, 1.0, &unit()).unwrap(), 0.24412945131103, 1e-12);
        assert_eq!(m_n_lambda(10_000, 0.5, 0.9).unwrap(), 12);
    }

    #[test]
    fn frozen_ring_bounds() {
        let inp = ring_inputs();
        close(estimation_bound_unchecked(&inp).unwrap(), 1966379.6184421117, 1e-12);
        close(
            approximation_bound_unchecked(&inp, 0.05, ApproxCoefficient::Standard).unwrap(),
            107.30661022157184,
            1e-12,
        );
        let total = total_bound_unchecked(&inp, 0.05).unwrap();
        close(total.estimation_bound, 2394575.8613667064, 1e-12);
        close(total.approximation_bound, 111.22438419212212, 1e-12);
        close(total.total_bound, 2394687.0857508986, 1e-12);
        assert!(total.h_term_omitted);
        assert!(!total.violations.is_empty());
        assert_eq!(total.n0, None);
        assert!(total_bound(&inp, 0.05).is_err());
        assert!(estimation_bound(&inp).is_err());
    }

    #[test]
    fn ring_sample_size_condition() {
        let inp = ring_inputs();
        close(invertibility_lhs(&inp, 1_000_000).unwrap(), 37673.71, 1e-5);
        close(invertibility_lhs(&inp, 1_000_000_000).unwrap(), 2370.51, 1e-5);
        assert!(invertibility_lhs(&inp, 100_000_000_000_000_000).unwrap() < 1.0);
        assert_eq!(n0(&inp, 1_000_000).unwrap(), SampleSize::NotFoundBelowCap(1_000_000));
    }

    #[test]
    fn deviation_forms_agree() {
        for (n, delta, k) in [(100.0, 0.1, 1.0), (1e6, 0.01, 0.5), (7.0, 0.3, 3.0)] {
            let m = MixingParams::new(2.0, 0.7, k).unwrap();
            close(deviation_factor(n, delta, &m), deviation_factor_product_form(n, delta, &m), 1e-12);
        }
    }

    #[test]
    fn hypothesis_checks() {
        assert!(ambient_gap_holds(4, 64, 0.1, 4.0));
        assert!(!ambient_gap_holds(4, 20, 0.1, 4.0));
        assert!(projected_dim_holds(160, 1000, 0.1, 4.0));
        assert!(!projected_dim_holds(150, 1000, 0.1, 4.0));
    }
}
