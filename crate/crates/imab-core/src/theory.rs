//! Closed-form performance constants and the numeric facts behind them:
//! guarantee factors for the threshold round robin, its hybrid fallback and
//! unknown-horizon variants, hard-family lower-bound parameters, and small
//! verifiable lemmas (one-variable minimum, balancing inequality, value
//! recurrence) as executable calculators.
//!
//! Everything here is a pure function. Exponents that reduce to square
//! roots at α = 1 or β = 1 are computed with `sqrt`, which is correctly
//! rounded, so the worked constants (1/64, 1/1024, x* = 1/2, ...) come out
//! exact in floating point.

use serde::Serialize;

use crate::error::Error;
use crate::Result;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    Ok(())
}

fn check_k(k: usize, min: usize) -> Result<()> {
    if k < min {
        return Err(Error::InvalidParam(format!("k must be >= {min}, got {k}")));
    }
    Ok(())
}

/// The exponent γ = α/(α+1) that shows up in every k-dependence.
pub fn gamma_exponent(alpha: f64) -> f64 {
    alpha / (alpha + 1.0)
}

/// x^γ with the α = 1 case routed through `sqrt` for exactness.
fn pow_gamma(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x.sqrt()
    } else {
        x.powf(gamma_exponent(alpha))
    }
}

/// Guarantee factor of the thresholded round robin: expected reward is at
/// least factor·OPT_T, with
///   factor = 1 / (2^(α+3) · (α+1) · (k+1)^(α/(α+1))).
pub fn ptrr_bound_factor(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_k(k, 1)?;
    let two_pow = if alpha == 1.0 {
        16.0
    } else {
        2f64.powf(alpha + 3.0)
    };
    Ok(1.0 / (two_pow * (alpha + 1.0) * pow_gamma((k + 1) as f64, alpha)))
}

/// Fallback guarantee of the two-stage hybrid when no certificate fires:
///   factor = 1 / (2^(α+7) · (α+1) · (k+1)^(α/(α+1))).
pub fn hybrid_fallback_factor(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_k(k, 1)?;
    let two_pow = if alpha == 1.0 {
        256.0
    } else {
        2f64.powf(alpha + 7.0)
    };
    Ok(1.0 / (two_pow * (alpha + 1.0) * pow_gamma((k + 1) as f64, alpha)))
}

fn sixteen_pow(alpha: f64) -> f64 {
    if alpha == 1.0 {
        16.0
    } else {
        16f64.powf(alpha)
    }
}

/// Guarantee factor of the horizon-doubling wrapper over the whole run:
///   factor = 1 / (2048 · 16^α · (α+1) · log(128k) · (k+1)^(α/(α+1))),
/// with the log taken in `base` (natural when `None`).
pub fn unknown_t_factor(alpha: f64, k: usize, base: Option<f64>) -> Result<f64> {
    check_alpha(alpha)?;
    check_k(k, 1)?;
    let log = match base {
        None => ((128 * k) as f64).ln(),
        Some(b) => {
            if !(b > 1.0 && b.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "log base must be a finite number > 1, got {b}"
                )));
            }
            ((128 * k) as f64).ln() / b.ln()
        }
    };
    Ok(
        1.0 / (2048.0
            * sixteen_pow(alpha)
            * (alpha + 1.0)
            * log
            * pow_gamma((k + 1) as f64, alpha)),
    )
}

/// Per-cycle version of the doubling guarantee: what one completed cycle's
/// exploit half earns relative to the optimum at that cycle's scale. The
/// log factor of `unknown_t_factor` pays for summing cycles and is absent
/// here.
pub fn doubling_cycle_factor(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_k(k, 1)?;
    Ok(1.0 / (2048.0 * sixteen_pow(alpha) * (alpha + 1.0) * pow_gamma((k + 1) as f64, alpha)))
}

/// Coefficient of the area-under-threshold lower bound: abandoning an arm
/// after t pulls banks at least area_coefficient·(t−1)^(α+1), with
///   area_coefficient = m / ((α+1)·τ^α).
pub fn area_coefficient(m: f64, tau: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "m must be >= 0 and finite, got {m}"
        )));
    }
    if tau == 0 {
        return Err(Error::InvalidParam("tau must be at least 1".into()));
    }
    let tau_pow = if alpha == 1.0 {
        tau as f64
    } else {
        (tau as f64).powf(alpha)
    };
    Ok(m / ((alpha + 1.0) * tau_pow))
}

// ---------------------------------------------------------------------------
// Hard-family lower bound
// ---------------------------------------------------------------------------

/// Parameters of the hard instance family at exponent β and arm count k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LbParams {
    /// Minimizer of h: x* = (kβ(β+1))^(−1/(β+1)).
    pub x_star: f64,
    /// h(x*) = (β+1)²·(x*)^β.
    pub h_at_x_star: f64,
    /// Upper bound on any algorithm's competitive ratio against the family:
    /// (3/2)·(β+1)²·(β(β+1)k)^(−β/(β+1)).
    pub ratio_bound: f64,
    /// Smallest horizon at which the construction works: 2/x*.
    #[serde(rename = "T_min")]
    pub t_min: f64,
}

/// The adversary's trade-off curve h(x) = 1/(kx) + (β+1)·x^β for x > 0:
/// playing break point x·T costs 1/(kx) in misses or (β+1)x^β in value.
pub fn h_curve(x: f64, beta: f64, k: usize) -> f64 {
    let x_pow = if beta == 1.0 { x } else { x.powf(beta) };
    1.0 / (k as f64 * x) + (beta + 1.0) * x_pow
}

/// Closed-form minimizer of `h_curve` and the resulting ratio bound.
pub fn lb_params(beta: f64, k: usize) -> Result<LbParams> {
    check_beta(beta)?;
    check_k(k, 2)?;
    let base = k as f64 * beta * (beta + 1.0);
    let e = 1.0 / (beta + 1.0);
    let (x_star, base_pow_beta_e) = if beta == 1.0 {
        let r = 1.0 / base.sqrt();
        (r, r)
    } else {
        (base.powf(-e), base.powf(-beta * e))
    };
    let x_star_pow = if beta == 1.0 {
        x_star
    } else {
        x_star.powf(beta)
    };
    Ok(LbParams {
        x_star,
        h_at_x_star: (beta + 1.0) * (beta + 1.0) * x_star_pow,
        ratio_bound: 1.5 * (beta + 1.0) * (beta + 1.0) * base_pow_beta_e,
        t_min: 2.0 / x_star,
    })
}

/// Generous scoring of a pull schedule against the hard family with break
/// point s: every arm that received at least s pulls is scored as if it
/// were the good arm and had been played optimally for all T pulls, and
/// every other placement is scored as if each of its T pulls returned the
/// full break-point value g(s). With A = #{arms with >= s pulls} out of k,
///   value = (A/k)·OPT_T + (1 − A/k)·T·g(s),
/// where OPT_T = Σ_{t=1..T} m(t/T)^β and g(s) = m·(min(s,T)/T)^β.
pub fn generous_value(
    pull_counts: &[usize],
    s: usize,
    beta: f64,
    k: usize,
    m: f64,
    horizon: usize,
) -> f64 {
    let a = pull_counts.iter().filter(|&&n| n >= s).count() as f64;
    let t = horizon as f64;
    let opt: f64 = (1..=horizon)
        .map(|u| {
            let frac = u as f64 / t;
            m * if beta == 1.0 { frac } else { frac.powf(beta) }
        })
        .sum();
    let frac = s.min(horizon) as f64 / t;
    let g = m * if beta == 1.0 { frac } else { frac.powf(beta) };
    let share = a / k as f64;
    share * opt + (1.0 - share) * t * g
}

// ---------------------------------------------------------------------------
// Small lemmas
// ---------------------------------------------------------------------------

/// Exact minimum of u·y^p + v·(1−y)^p over y ∈ [0, 1] for p > 1:
///   min = (u^(−1/(p−1)) + v^(−1/(p−1)))^(−(p−1))
/// at y* = v^(1/(p−1)) / (u^(1/(p−1)) + v^(1/(p−1))).
pub fn one_var_min(u: f64, v: f64, p: f64) -> Result<(f64, f64)> {
    if !(u > 0.0 && u.is_finite() && v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "u and v must be positive and finite, got u={u}, v={v}"
        )));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParam(format!("p must be > 1, got {p}")));
    }
    let q = 1.0 / (p - 1.0);
    let min = (u.powf(-q) + v.powf(-q)).powf(-(p - 1.0));
    let y_star = v.powf(q) / (u.powf(q) + v.powf(q));
    Ok((min, y_star))
}

/// Both sides of the balancing inequality
///   1/k' + (1 − 1/k')·(1 + (2·k'^γ)^(1/α))^(−α)  >=  1 / (2(k'+1)^γ),
/// γ = α/(α+1). The left side is the exact one-variable minimum plugged
/// into the recurrence; the right side is the clean factor the induction
/// needs. `holds` must come out true for every k' >= 1 and α ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn balance_check(k_prime: usize, alpha: f64) -> BalanceCheck {
    debug_assert!(k_prime >= 1);
    let kf = k_prime as f64;
    let inner = 2.0 * pow_gamma(kf, alpha);
    let inner_pow = if alpha == 1.0 {
        inner
    } else {
        inner.powf(1.0 / alpha)
    };
    let outer = 1.0 + inner_pow;
    let outer_pow = if alpha == 1.0 {
        outer
    } else {
        outer.powf(alpha)
    };
    let lhs = 1.0 / kf + (1.0 - 1.0 / kf) / outer_pow;
    let rhs = 1.0 / (2.0 * pow_gamma(kf + 1.0, alpha));
    BalanceCheck {
        lhs,
        rhs,
        holds: lhs >= rhs,
    }
}

// ---------------------------------------------------------------------------
// Value recurrence
// ---------------------------------------------------------------------------

/// Work cap for the recurrence DP (states × transitions).
const RECURRENCE_WORK_CAP: u128 = 1_000_000_000;

/// Lower bound on the expected reward from a state with k' untouched arms
/// and τ' free pulls, against the pure-power benchmark
/// OPT_t = Σ_{s=1..t} m(s/τ)^α. Dynamic program over integer abandonment
/// times:
///   V(τ'', ·) = 0 for τ'' <= 0,
///   V(τ'', 1) = OPT_{τ''},
///   V(τ'', k'') = (1/k'')·OPT_{τ''+k''}
///               + (1 − 1/k'')·min_{0<=t<=τ''} [ c·t^(α+1) + V(τ''−t, k''−1) ],
/// with c = m/((α+1)τ^α). The result must dominate the closed form of
/// `recurrence_closed_form` everywhere.
pub fn recurrence_value(
    tau_prime: usize,
    k_prime: usize,
    m: f64,
    tau: usize,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_k(k_prime, 1)?;
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "m must be >= 0 and finite, got {m}"
        )));
    }
    if tau == 0 {
        return Err(Error::InvalidParam("tau must be at least 1".into()));
    }
    let work = (tau_prime as u128 + 1) * (tau_prime as u128 + 1) * k_prime as u128;
    if work > RECURRENCE_WORK_CAP {
        return Err(Error::InvalidParam(format!(
            "recurrence DP needs about {work} steps for tau_prime={tau_prime}, \
             k_prime={k_prime}, over the cap of {RECURRENCE_WORK_CAP}; evaluate a \
             coarser state (smaller tau_prime or k_prime) instead"
        )));
    }

    let coeff = area_coefficient(m, tau, alpha)?;
    let horizon = tau_prime + k_prime;
    // opt_pp[t] = sum over the first t per-pull values of the benchmark.
    let mut opt_pp = Vec::with_capacity(horizon + 1);
    opt_pp.push(0.0);
    let mut acc = 0.0;
    for s in 1..=horizon {
        let frac = s as f64 / tau as f64;
        acc += m * if alpha == 1.0 { frac } else { frac.powf(alpha) };
        opt_pp.push(acc);
    }
    let area = |t: usize| -> f64 {
        let tf = t as f64;
        coeff
            * if alpha == 1.0 {
                tf * tf
            } else {
                tf.powf(alpha + 1.0)
            }
    };

    // prev holds V(·, k''−1); both bases are encoded in the k'' = 1 row.
    let mut prev: Vec<f64> = opt_pp[..=tau_prime].to_vec();
    for kpp in 2..=k_prime {
        let mut next = vec![0.0; tau_prime + 1];
        let kf = kpp as f64;
        for tpp in 1..=tau_prime {
            let mut best = f64::INFINITY;
            for t in 0..=tpp {
                let cand = area(t) + prev[tpp - t];
                if cand < best {
                    best = cand;
                }
            }
            next[tpp] = opt_pp[tpp + kpp] / kf + (1.0 - 1.0 / kf) * best;
        }
        prev = next;
    }
    Ok(prev[tau_prime])
}

/// The closed form the recurrence DP must dominate:
///   m/((α+1)τ^α) · (τ')^(α+1) / (2(k'+1)^γ).
pub fn recurrence_closed_form(
    tau_prime: usize,
    k_prime: usize,
    m: f64,
    tau: usize,
    alpha: f64,
) -> Result<f64> {
    check_k(k_prime, 1)?;
    let coeff = area_coefficient(m, tau, alpha)?;
    let tp = tau_prime as f64;
    let tp_pow = if alpha == 1.0 {
        tp * tp
    } else {
        tp.powf(alpha + 1.0)
    };
    Ok(coeff * tp_pow / (2.0 * pow_gamma((k_prime + 1) as f64, alpha)))
}

// ---------------------------------------------------------------------------
// Bundles and reports
// ---------------------------------------------------------------------------

/// The three constants most callers want together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiscBounds {
    pub hybrid_fallback: f64,
    #[serde(rename = "unknownT_factor")]
    pub unknown_t_factor: f64,
    /// Area coefficient at unit scale (m = 1, τ = 1): 1/(α+1).
    pub area_coeff: f64,
}

pub fn misc_bounds(alpha: f64, k: usize) -> Result<MiscBounds> {
    Ok(MiscBounds {
        hybrid_fallback: hybrid_fallback_factor(alpha, k)?,
        unknown_t_factor: unknown_t_factor(alpha, k, None)?,
        area_coeff: area_coefficient(1.0, 1, alpha)?,
    })
}

/// One named constant with the inputs it was computed from and the formula
/// it instantiates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub value: f64,
    pub formula: String,
}

impl BoundReport {
    fn new(name: &str, params: &[(&str, f64)], value: f64, formula: &str) -> Self {
        Self {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            formula: formula.to_string(),
        }
    }

    /// `name,key=value;key=value,value` (the formula column is omitted; it
    /// is available in the JSON form).
    pub fn csv_row(&self) -> String {
        let params = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        format!("{},{},{}", self.name, params, self.value)
    }
}

/// Header for `BoundReport::csv_row`.
pub const BOUNDS_CSV_HEADER: &str = "name,params,value";

/// Every calculator above at one (α, k) point, plus the hard-family block
/// when β is given.
pub fn bound_reports(alpha: f64, k: usize, beta: Option<f64>) -> Result<Vec<BoundReport>> {
    let ak: &[(&str, f64)] = &[("alpha", alpha), ("k", k as f64)];
    let mut out = vec![
        BoundReport::new(
            "ptrr_factor",
            ak,
            ptrr_bound_factor(alpha, k)?,
            "1/(2^(alpha+3)*(alpha+1)*(k+1)^(alpha/(alpha+1)))",
        ),
        BoundReport::new(
            "hybrid_fallback_factor",
            ak,
            hybrid_fallback_factor(alpha, k)?,
            "1/(2^(alpha+7)*(alpha+1)*(k+1)^(alpha/(alpha+1)))",
        ),
        BoundReport::new(
            "unknown_t_factor",
            ak,
            unknown_t_factor(alpha, k, None)?,
            "1/(2048*16^alpha*(alpha+1)*ln(128k)*(k+1)^(alpha/(alpha+1)))",
        ),
        BoundReport::new(
            "doubling_cycle_factor",
            ak,
            doubling_cycle_factor(alpha, k)?,
            "1/(2048*16^alpha*(alpha+1)*(k+1)^(alpha/(alpha+1)))",
        ),
        BoundReport::new(
            "area_coeff_unit",
            &[("alpha", alpha)],
            area_coefficient(1.0, 1, alpha)?,
            "1/(alpha+1) at m=1, tau=1",
        ),
    ];
    if let Some(beta) = beta {
        let lb = lb_params(beta, k)?;
        let bk: &[(&str, f64)] = &[("beta", beta), ("k", k as f64)];
        out.push(BoundReport::new(
            "lb_x_star",
            bk,
            lb.x_star,
            "(k*beta*(beta+1))^(-1/(beta+1))",
        ));
        out.push(BoundReport::new(
            "lb_h_at_x_star",
            bk,
            lb.h_at_x_star,
            "(beta+1)^2*x_star^beta",
        ));
        out.push(BoundReport::new(
            "lb_ratio_bound",
            bk,
            lb.ratio_bound,
            "(3/2)*(beta+1)^2*(beta*(beta+1)*k)^(-beta/(beta+1))",
        ));
        out.push(BoundReport::new("lb_T_min", bk, lb.t_min, "2/x_star"));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
