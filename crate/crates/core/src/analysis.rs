//! Contraction analysis of the Schwarz iteration matrix.
//!
//! Everything here is driven by the orbit `w^n = T^n 1_N`. Because `T` is
//! entrywise nonnegative, `||T^n||_inf` equals the largest component of
//! `w^n`, so norms never require forming matrix powers. The verifiers check
//! the following facts about that orbit, exactly on the rational backend:
//!
//! * `||T^n|| = ||T^n 1_N||` (cross-checked against explicit dense powers);
//! * `||T^n 1_N|| = 1` for `n < ceil(N/2)` and `< 1` at `n = ceil(N/2)`;
//! * beyond that point the norm drops at every step for even `N` and over
//!   every two steps for odd `N`;
//! * the shape of `w^n`: the outermost `n` blocks on each side are strictly
//!   below one while the rest equal one (for `n <= ceil(N/2)`), the vector is
//!   mirror-symmetric, and it increases monotonically towards the centre.
//!
//! Checks whose claimed range of validity is narrower than what is tested
//! are reported with `asserted = false`; they are observations and never
//! make a verification run fail.

use std::cmp::Ordering;

use nalgebra::linalg::Schur;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Decomposition, GeometryError};
use crate::numerics::{Backend, Scalar, DEFAULT_FLOAT_TOL};
use crate::operator::{
    check_block_relations, swap, DenseMatrix, GeneratorBlocks, InterfaceVector, OperatorError,
    Pair, SchwarzOperator, DEFAULT_DENSE_CAP,
};

/// Default cap on `2N` for the dense eigenvalue path.
pub const DEFAULT_EIGEN_CAP: usize = 2000;
/// Default iteration cap for [`iterations_to_tolerance`].
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;
/// The Gelfand fallback uses `n = GELFAND_FACTOR * ceil(N/2)`.
pub const GELFAND_FACTOR: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("not converged after {iterations} iterations (last norm {last_norm})")]
    NotConverged {
        iterations: usize,
        last_norm: String,
    },
    #[error("tolerance must lie in (0, 1) (got {0})")]
    InvalidTolerance(String),
    #[error("n_max = {n_max} is too small; need at least {required}")]
    RangeTooShort { n_max: usize, required: usize },
    #[error("dense eigenvalue cap exceeded: 2N = {dim} > {cap} and fallback disabled")]
    EigenCap { dim: usize, cap: usize },
    #[error("eigenvalue iteration did not converge")]
    EigenFailed,
}

fn tol<S: Scalar>() -> f64 {
    match S::BACKEND {
        Backend::Exact => 0.0,
        Backend::Float => DEFAULT_FLOAT_TOL,
    }
}

fn lt<S: Scalar>(x: &S, y: &S) -> bool {
    matches!(x.compare(y, tol::<S>()), Ok(Ordering::Less))
}

fn le<S: Scalar>(x: &S, y: &S) -> bool {
    matches!(
        x.compare(y, tol::<S>()),
        Ok(Ordering::Less | Ordering::Equal)
    )
}

fn eq<S: Scalar>(x: &S, y: &S) -> bool {
    matches!(x.compare(y, tol::<S>()), Ok(Ordering::Equal))
}

fn pair_lt<S: Scalar>(x: &Pair<S>, y: &Pair<S>) -> bool {
    lt(&x[0], &y[0]) && lt(&x[1], &y[1])
}

fn pair_le<S: Scalar>(x: &Pair<S>, y: &Pair<S>) -> bool {
    le(&x[0], &y[0]) && le(&x[1], &y[1])
}

fn pair_eq<S: Scalar>(x: &Pair<S>, y: &Pair<S>) -> bool {
    eq(&x[0], &y[0]) && eq(&x[1], &y[1])
}

fn show<S: Scalar>(p: &Pair<S>) -> String {
    format!("({}, {})", p[0], p[1])
}

/// Smallest componentwise gap `y - x`, as a float.
fn pair_slack<S: Scalar>(x: &Pair<S>, y: &Pair<S>) -> f64 {
    (y[0].clone() - x[0].clone())
        .to_f64()
        .min((y[1].clone() - x[1].clone()).to_f64())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEntry<S> {
    pub n: usize,
    /// `||T^n 1_N||_inf`.
    pub norm: S,
    /// `norm(n) / norm(n-1)`; absent for `n = 0` or after a zero norm.
    pub ratio: Option<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSequence<S> {
    pub entries: Vec<NormEntry<S>>,
}

impl<S: Scalar> NormSequence<S> {
    pub fn norm(&self, n: usize) -> &S {
        &self.entries[n].norm
    }

    pub fn norms(&self) -> impl Iterator<Item = &S> {
        self.entries.iter().map(|e| &e.norm)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `||T^n||_inf` for `n = 0..=n_max`, computed as `||T^n 1_N||_inf`.
pub fn norm_via_ones<S: Scalar>(op: &SchwarzOperator<S>, n_max: usize) -> NormSequence<S> {
    let orbit = op
        .orbit(InterfaceVector::ones(op.subdomains()))
        .expect("1_N matches the operator");
    let mut entries: Vec<NormEntry<S>> = Vec::with_capacity(n_max + 1);
    for (n, w) in orbit.take(n_max + 1).enumerate() {
        let norm = w.norm_inf();
        let ratio = entries
            .last()
            .filter(|prev| !prev.norm.is_zero())
            .map(|prev| norm.clone() / prev.norm.clone());
        entries.push(NormEntry { n, norm, ratio });
    }
    NormSequence { entries }
}

/// Result of one verified claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub range_tested: String,
    pub pass: bool,
    pub first_violation: Option<String>,
    pub backend: Backend,
    /// `false` for observations outside a claim's stated range.
    pub asserted: bool,
    /// Smallest margin of the strict inequalities involved, when meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub observations: Vec<String>,
}

impl CheckOutcome {
    fn new<S: Scalar>(name: &str, range_tested: String) -> Self {
        CheckOutcome {
            name: name.into(),
            range_tested,
            pass: true,
            first_violation: None,
            backend: S::BACKEND,
            asserted: true,
            min_slack: None,
            observations: Vec::new(),
        }
    }

    fn violate(&mut self, msg: impl FnOnce() -> String) {
        if self.pass {
            self.pass = false;
            self.first_violation = Some(msg());
        }
    }

    fn slack(&mut self, s: f64) {
        self.min_slack = Some(self.min_slack.map_or(s, |m| m.min(s)));
    }

    fn observation(mut self) -> Self {
        self.asserted = false;
        self
    }
}

/// Compares the maximum absolute row sum of explicit dense powers `T^n`
/// against `||T^n 1_N||` for `n = 0..=n_max`.
pub fn verify_lemma1<S: Scalar>(
    op: &SchwarzOperator<S>,
    n_max: usize,
    cap: usize,
) -> Result<CheckOutcome, AnalysisError> {
    let t = op.assemble_dense(cap)?;
    let norms = norm_via_ones(op, n_max);
    let mut out = CheckOutcome::new::<S>("lemma1_norm_via_ones", format!("n = 0..={n_max}"));
    let mut power = DenseMatrix::identity(op.dim());
    for n in 0..=n_max {
        let dense_norm = power.norm_inf();
        if !eq(&dense_norm, norms.norm(n)) {
            out.violate(|| {
                format!(
                    "n = {n}: max abs row sum of T^n = {dense_norm}, ||T^n 1|| = {}",
                    norms.norm(n)
                )
            });
        }
        if n < n_max {
            power = power.matmul(t.dense());
        }
    }
    Ok(out)
}

/// Smallest `n` with `||T^n 1_N|| < 1`.
pub fn contraction_onset<S: Scalar>(op: &SchwarzOperator<S>) -> Result<usize, AnalysisError> {
    let limit = 4 * op.subdomains() + 4;
    let one = S::one();
    let orbit = op.orbit(InterfaceVector::ones(op.subdomains()))?;
    let mut last = one.clone();
    for (n, w) in orbit.take(limit + 1).enumerate() {
        last = w.norm_inf();
        if lt(&last, &one) {
            return Ok(n);
        }
    }
    Err(AnalysisError::NotConverged {
        iterations: limit,
        last_norm: last.to_literal(),
    })
}

/// Norms equal one before `ceil(N/2)`, drop below one at `ceil(N/2)`, and
/// [`contraction_onset`] returns exactly `ceil(N/2)`.
pub fn verify_theorem1a<S: Scalar>(op: &SchwarzOperator<S>) -> CheckOutcome {
    let k = op.decomposition().half_ceil();
    let norms = norm_via_ones(op, k);
    let one = S::one();
    let mut out = CheckOutcome::new::<S>("theorem1a_contraction_onset", format!("n = 0..={k}"));
    for e in &norms.entries[..k] {
        if !eq(&e.norm, &one) {
            out.violate(|| format!("n = {}: norm {} != 1", e.n, e.norm));
        }
    }
    let at_onset = norms.norm(k);
    out.slack((one.clone() - at_onset.clone()).to_f64());
    if !lt(at_onset, &one) {
        out.violate(|| format!("n = {k}: norm {at_onset} is not < 1"));
    }
    match contraction_onset(op) {
        Ok(onset) if onset == k => {}
        Ok(onset) => out.violate(|| format!("contraction onset {onset} != ceil(N/2) = {k}")),
        Err(e) => out.violate(|| format!("contraction onset not found: {e}")),
    }
    out
}

/// Even `N`: `||T^{n+1}|| < ||T^n||`; odd `N`: `||T^{n+2}|| < ||T^n||`; for
/// `ceil(N/2) <= n < n_max`. Odd-`N` single-step plateaus are recorded as
/// observations.
pub fn verify_theorem1b<S: Scalar>(
    op: &SchwarzOperator<S>,
    n_max: usize,
) -> Result<CheckOutcome, AnalysisError> {
    let k = op.decomposition().half_ceil();
    if n_max < k + 2 {
        return Err(AnalysisError::RangeTooShort {
            n_max,
            required: k + 2,
        });
    }
    let even = op.subdomains().is_multiple_of(2);
    let step = if even { 1 } else { 2 };
    let norms = norm_via_ones(op, n_max + 1);
    let mut out = CheckOutcome::new::<S>(
        if even {
            "theorem1b_even_single_step"
        } else {
            "theorem1b_odd_two_step"
        },
        format!("n = {k}..{n_max}"),
    );
    let mut plateaus = Vec::new();
    for n in k..n_max {
        let (now, later) = (norms.norm(n), norms.norm(n + step));
        out.slack((now.clone() - later.clone()).to_f64());
        if !lt(later, now) {
            out.violate(|| {
                format!(
                    "n = {n}: ||T^{}|| = {later} is not < ||T^n|| = {now}",
                    n + step
                )
            });
        }
        if !even && !lt(norms.norm(n + 1), now) {
            plateaus.push(n + 1);
        }
    }
    if !plateaus.is_empty() {
        out.observations.push(format!(
            "single-step plateaus (||T^n|| = ||T^(n-1)||) at n = {plateaus:?}"
        ));
    }
    Ok(out)
}

/// Shape of `w = T^n 1_N`. Fields are `None` when `n` lies outside the
/// range where the property is claimed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub n: usize,
    /// Blocks `1..=n` and `N+1-n..=N` strictly below `1`, all others equal
    /// to `1`; claimed for `n <= ceil(N/2)`.
    pub vn_membership: Option<bool>,
    /// `w_j = P w_{N+1-j}` for all `j`; evaluated at every `n`.
    pub symmetry_ok: bool,
    /// `(w_j)_1 <= (w_j)_2` on the left half, mirrored on the right.
    pub slot_order_ok: Option<bool>,
    /// `w_j < w_{j+1}` towards the centre, mirrored on the right.
    pub block_monotone_ok: Option<bool>,
    /// Odd `N`, `n >= floor(N/2)`:
    /// `w_{floor(N/2)} <= w_{ceil(N/2)}` and `w_{floor(N/2)+2} < w_{ceil(N/2)}`.
    pub odd_center_ok: Option<bool>,
    pub violations: Vec<String>,
    /// Smallest gap over the strict monotonicity comparisons.
    pub min_slack: Option<f64>,
}

impl ShapeReport {
    /// Every property claimed at this `n` holds.
    pub fn all_claimed_ok(&self) -> bool {
        let claimed_symmetry = self.vn_membership.is_none() || self.symmetry_ok;
        claimed_symmetry
            && [
                self.vn_membership,
                self.slot_order_ok,
                self.block_monotone_ok,
                self.odd_center_ok,
            ]
            .iter()
            .all(|c| c.unwrap_or(true))
    }
}

/// Checks the shape properties of `w` (assumed to equal `T^n 1_N`).
pub fn shape_of<S: Scalar>(w: &InterfaceVector<S>, n: usize) -> ShapeReport {
    let big_n = w.num_blocks();
    let (half_floor, half_ceil) = (big_n / 2, big_n.div_ceil(2));
    // 1-based block access.
    let blk = |j: usize| w.block(j - 1);
    let ones: Pair<S> = [S::one(), S::one()];
    let mut violations = Vec::new();
    let mut min_slack: Option<f64> = None;
    let mut note_slack = |s: f64| min_slack = Some(min_slack.map_or(s, |m: f64| m.min(s)));

    let vn_membership = (n >= 1 && n <= half_ceil).then(|| {
        let mut ok = true;
        for j in 1..=big_n {
            let outer = j <= n || j > big_n - n;
            let good = if outer {
                pair_lt(blk(j), &ones)
            } else {
                pair_eq(blk(j), &ones)
            };
            if !good {
                ok = false;
                violations.push(format!(
                    "V^{n}: block {j} = {} should be {} 1",
                    show(blk(j)),
                    if outer { "<" } else { "=" }
                ));
            }
        }
        ok
    });

    let mut symmetry_ok = true;
    for j in 1..=big_n {
        if !pair_eq(blk(j), &swap(blk(big_n + 1 - j))) {
            symmetry_ok = false;
            violations.push(format!(
                "symmetry: w_{j} = {} but P w_{} = {}",
                show(blk(j)),
                big_n + 1 - j,
                show(&swap(blk(big_n + 1 - j)))
            ));
            break;
        }
    }

    // Early iterations (n <= floor(N/2) - 1) constrain blocks 1..=n; later
    // ones constrain blocks 1..=floor(N/2) - 1.
    let j_max = if n >= 1 && n < half_floor {
        Some(n)
    } else if n >= half_floor && n >= 1 {
        Some(half_floor.saturating_sub(1))
    } else {
        None
    };
    let (mut slot_order_ok, mut block_monotone_ok) = (None, None);
    if let Some(j_max) = j_max {
        let (mut slots, mut mono) = (true, true);
        for j in 1..=j_max {
            let (left, right) = (blk(j), blk(big_n + 1 - j));
            if !(le(&left[0], &left[1]) && le(&right[1], &right[0])) {
                slots = false;
                violations.push(format!(
                    "slot order at j = {j}: w_j = {}, w_(N+1-j) = {}",
                    show(left),
                    show(right)
                ));
            }
            let (inner_left, inner_right) = (blk(j + 1), blk(big_n - j));
            note_slack(pair_slack(left, inner_left));
            note_slack(pair_slack(right, inner_right));
            if !(pair_lt(left, inner_left) && pair_lt(right, inner_right)) {
                mono = false;
                violations.push(format!(
                    "monotonicity at j = {j}: w_j = {} vs w_(j+1) = {}; w_(N+1-j) = {} vs w_(N-j) = {}",
                    show(left),
                    show(inner_left),
                    show(right),
                    show(inner_right)
                ));
            }
        }
        slot_order_ok = Some(slots);
        block_monotone_ok = Some(mono);
    }

    let odd_center_ok = (big_n % 2 == 1 && n >= half_floor && n >= 1).then(|| {
        let centre = blk(half_ceil);
        let weak = half_floor == 0 || pair_le(blk(half_floor), centre);
        let strict = pair_lt(blk(half_floor + 2), centre);
        if !weak {
            violations.push(format!(
                "odd centre: w_{half_floor} = {} is not <= w_{half_ceil} = {}",
                show(blk(half_floor)),
                show(centre)
            ));
        }
        if !strict {
            violations.push(format!(
                "odd centre: w_{} = {} is not < w_{half_ceil} = {}",
                half_floor + 2,
                show(blk(half_floor + 2)),
                show(centre)
            ));
        }
        weak && strict
    });

    ShapeReport {
        n,
        vn_membership,
        symmetry_ok,
        slot_order_ok,
        block_monotone_ok,
        odd_center_ok,
        violations,
        min_slack,
    }
}

pub fn verify_shape<S: Scalar>(
    op: &SchwarzOperator<S>,
    n: usize,
) -> Result<ShapeReport, AnalysisError> {
    let w = op.power_apply(&InterfaceVector::ones(op.subdomains()), n)?;
    Ok(shape_of(&w, n))
}

/// Runs [`shape_of`] for `n = 1..=n_max` and folds the reports into one
/// outcome per claim.
pub fn verify_shape_range<S: Scalar>(op: &SchwarzOperator<S>, n_max: usize) -> Vec<CheckOutcome> {
    let big_n = op.subdomains();
    let (half_floor, half_ceil) = (big_n / 2, big_n.div_ceil(2));
    let mut vn = CheckOutcome::new::<S>(
        "lemma2_vn_membership",
        format!("n = 1..={}", half_ceil.min(n_max)),
    );
    let mut sym = CheckOutcome::new::<S>(
        "lemma2_symmetry",
        format!("n = 1..={}", half_ceil.min(n_max)),
    );
    let mut sym_beyond = CheckOutcome::new::<S>(
        "symmetry_beyond_lemma2",
        format!("n = {}..={n_max}", half_ceil + 1),
    )
    .observation();
    let mut early = CheckOutcome::new::<S>(
        "lemma4_early_shape",
        format!("n = 1..={}", half_floor.saturating_sub(1)),
    );
    let mut late = CheckOutcome::new::<S>(
        "lemma5_late_shape",
        format!("n = {}..={n_max}", half_floor.max(1)),
    );
    let mut odd = (big_n % 2 == 1).then(|| {
        CheckOutcome::new::<S>(
            "lemma5_odd_addendum",
            format!("n = {}..={n_max}", half_floor.max(1)),
        )
    });

    let orbit = op
        .orbit(InterfaceVector::ones(big_n))
        .expect("1_N matches the operator");
    for (n, w) in orbit.enumerate().take(n_max + 1).skip(1) {
        let rep = shape_of(&w, n);
        let first = || {
            format!(
                "n = {n}: {}",
                rep.violations.first().cloned().unwrap_or_default()
            )
        };
        if rep.vn_membership == Some(false) {
            vn.violate(first);
        }
        if !rep.symmetry_ok {
            if n <= half_ceil {
                sym.violate(first);
            } else {
                sym_beyond.violate(first);
            }
        }
        let lemma = if n < half_floor {
            &mut early
        } else {
            &mut late
        };
        if let Some(s) = rep.min_slack {
            lemma.slack(s);
        }
        if rep.slot_order_ok == Some(false) || rep.block_monotone_ok == Some(false) {
            lemma.violate(first);
        }
        if let (Some(odd), Some(false)) = (odd.as_mut(), rep.odd_center_ok) {
            if odd.pass {
                let at = rep
                    .violations
                    .iter()
                    .find(|v| v.starts_with("odd centre"))
                    .cloned()
                    .unwrap_or_default();
                odd.violate(|| format!("n = {n}: {at}"));
            }
            odd.observations.push(format!("fails at n = {n}"));
        }
    }
    if let Some(odd) = odd.as_mut() {
        let fails = odd.observations.len();
        odd.observations = if fails > 0 {
            vec![format!("{fails} of the tested n violate the claim")]
        } else {
            Vec::new()
        };
    }
    let mut out = vec![vn, sym, sym_beyond, early, late];
    out.extend(odd);
    out
}

/// Checks the generator-block relations on `samples` seeded draws of
/// `a < b <= c < d` from `{k / 1000}`; every tenth draw has `b = c`.
pub fn verify_block_relations<S: Scalar>(
    blocks: &GeneratorBlocks<S>,
    samples: usize,
    seed: u64,
) -> Result<CheckOutcome, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out =
        CheckOutcome::new::<S>("block_relations", format!("{samples} samples, seed {seed}"));
    let mut equality_cases = 0;
    for i in 0..samples {
        let with_equality = i % 10 == 0;
        let k = if with_equality { 3 } else { 4 };
        let mut picks: Vec<i64> = sample(&mut rng, 1000, k)
            .into_iter()
            .map(|x| x as i64)
            .collect();
        picks.sort_unstable();
        if with_equality {
            picks.insert(2, picks[1]);
        }
        let v: Vec<S> = picks.iter().map(|&p| S::from_ratio(p, 1000)).collect();
        let rep = check_block_relations(&v[0], &v[1], &v[2], &v[3], blocks)?;
        if rep.equality_case {
            equality_cases += 1;
        }
        if !rep.all_pass() {
            out.violate(|| {
                format!(
                    "(a, b, c, d) = ({}, {}, {}, {}): {rep:?}",
                    v[0], v[1], v[2], v[3]
                )
            });
        }
    }
    out.observations
        .push(format!("{equality_cases} samples with b = c"));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralMethod {
    DenseEigen,
    Gelfand { iterations: usize, converged: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub method: SpectralMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub dense_cap: usize,
    pub allow_fallback: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            dense_cap: DEFAULT_EIGEN_CAP,
            allow_fallback: true,
        }
    }
}

/// Largest eigenvalue modulus of a dense real matrix, via a real Schur
/// decomposition.
pub fn dense_spectral_radius(m: &DenseMatrix<f64>) -> Result<f64, AnalysisError> {
    if m.dim() == 0 {
        return Ok(0.0);
    }
    let schur =
        Schur::try_new(m.to_nalgebra(), f64::EPSILON, 100_000).ok_or(AnalysisError::EigenFailed)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// `||T^n 1_N||^{1/n}`. The flag reports whether the estimates at `n/2` and
/// `n` agree to `1e-3`.
pub fn gelfand_estimate(op: &SchwarzOperator<f64>, n: usize) -> (f64, bool) {
    let n = n.max(2);
    let half = n / 2;
    let norms = norm_via_ones(op, n);
    let root = |k: usize| {
        let x = *norms.norm(k);
        if x <= 0.0 {
            0.0
        } else {
            x.powf(1.0 / k as f64)
        }
    };
    let (coarse, fine) = (root(half), root(n));
    (fine, (fine - coarse).abs() <= 1e-3)
}

pub fn spectral_radius<S: Scalar>(
    op: &SchwarzOperator<S>,
    options: SpectralOptions,
) -> Result<SpectralEstimate, AnalysisError> {
    let op = op.to_f64();
    if op.dim() <= options.dense_cap {
        let dense = op.assemble_dense(DEFAULT_DENSE_CAP.max(op.dim()))?;
        return Ok(SpectralEstimate {
            value: dense_spectral_radius(dense.dense())?,
            method: SpectralMethod::DenseEigen,
        });
    }
    if !options.allow_fallback {
        return Err(AnalysisError::EigenCap {
            dim: op.dim(),
            cap: options.dense_cap,
        });
    }
    let iterations = GELFAND_FACTOR * op.decomposition().half_ceil();
    let (value, converged) = gelfand_estimate(&op, iterations);
    Ok(SpectralEstimate {
        value,
        method: SpectralMethod::Gelfand {
            iterations,
            converged,
        },
    })
}

/// `[1 - (delta / L)^k]^{1/k}` with `k = ceil(N/2)`. The inner bracket is
/// evaluated in the decomposition's backend.
pub fn spectral_bound<S: Scalar>(decomposition: &Decomposition<S>) -> f64 {
    let k = decomposition.half_ceil();
    let base = decomposition.delta().clone() / decomposition.length().clone();
    let inner = S::one() - base.powi(k as u32);
    inner.to_f64().powf(1.0 / k as f64)
}

/// Smallest `n` with `||T^n init||_inf < tol`.
pub fn iterations_to_tolerance<S: Scalar>(
    op: &SchwarzOperator<S>,
    tol: &S,
    init: &InterfaceVector<S>,
    max_iterations: usize,
) -> Result<usize, AnalysisError> {
    if !(*tol > S::zero() && *tol < S::one()) {
        return Err(AnalysisError::InvalidTolerance(tol.to_literal()));
    }
    let mut last = init.norm_inf();
    for (n, w) in op.orbit(init.clone())?.take(max_iterations + 1).enumerate() {
        last = w.norm_inf();
        if last < *tol {
            return Ok(n);
        }
    }
    Err(AnalysisError::NotConverged {
        iterations: max_iterations,
        last_norm: last.to_literal(),
    })
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub subdomains: usize,
    pub iterations: usize,
    pub onset: usize,
    pub rho: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<S> {
    pub ell: S,
    pub delta: S,
    pub tol: S,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of iterations against `N`.
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub max_iterations: usize,
    pub spectral: SpectralOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            spectral: SpectralOptions::default(),
        }
    }
}

/// One row per `N`, starting from `1_N`. Rows run concurrently.
pub fn scalability_sweep<S: Scalar>(
    subdomain_counts: &[usize],
    ell: &S,
    delta: &S,
    tol: &S,
    options: SweepOptions,
) -> Result<SweepReport<S>, AnalysisError> {
    let rows = subdomain_counts
        .par_iter()
        .map(|&n| {
            let decomposition = Decomposition::new(n, ell.clone(), delta.clone())?;
            let bound = spectral_bound(&decomposition);
            let op = SchwarzOperator::new(decomposition);
            let iterations = iterations_to_tolerance(
                &op,
                tol,
                &InterfaceVector::ones(n),
                options.max_iterations,
            )?;
            let rho = spectral_radius(&op, options.spectral)?.value;
            Ok(SweepRow {
                subdomains: n,
                iterations,
                onset: op.decomposition().half_ceil(),
                rho,
                bound,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.subdomains as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.iterations as f64).collect();
    Ok(SweepReport {
        ell: ell.clone(),
        delta: delta.clone(),
        tol: tol.clone(),
        slope: least_squares_slope(&xs, &ys),
        rows,
    })
}

/// Summary of the contraction behaviour of one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<S> {
    pub decomposition: Decomposition<S>,
    pub norms: NormSequence<S>,
    pub contraction_onset: usize,
    pub spectral_radius: SpectralEstimate,
    pub spectral_bound: f64,
    pub iterations_to_tol: usize,
    pub checks: Vec<CheckOutcome>,
}

impl<S: Scalar> ConvergenceReport<S> {
    pub fn compute(
        op: &SchwarzOperator<S>,
        n_max: usize,
        tol: &S,
        options: SweepOptions,
    ) -> Result<Self, AnalysisError> {
        let n_max = n_max.max(op.decomposition().half_ceil() + 2);
        let mut checks = vec![verify_theorem1a(op), verify_theorem1b(op, n_max)?];
        checks.extend(verify_shape_range(op, n_max));
        Ok(ConvergenceReport {
            decomposition: op.decomposition().clone(),
            norms: norm_via_ones(op, n_max),
            contraction_onset: contraction_onset(op)?,
            spectral_radius: spectral_radius(op, options.spectral)?,
            spectral_bound: spectral_bound(op.decomposition()),
            iterations_to_tol: iterations_to_tolerance(
                op,
                tol,
                &InterfaceVector::ones(op.subdomains()),
                options.max_iterations,
            )?,
            checks,
        })
    }
}

/// Every verifier in this module, in a fixed order.
pub fn verify_all<S: Scalar>(
    op: &SchwarzOperator<S>,
    n_max: usize,
    relation_samples: usize,
    seed: u64,
) -> Result<Vec<CheckOutcome>, AnalysisError> {
    let n_max = n_max.max(op.decomposition().half_ceil() + 2);
    let mut checks = vec![
        verify_lemma1(op, n_max, DEFAULT_DENSE_CAP)?,
        verify_theorem1a(op),
        verify_theorem1b(op, n_max)?,
    ];
    checks.extend(verify_shape_range(op, n_max));
    checks.push(verify_block_relations(op.blocks(), relation_samples, seed)?);
    Ok(checks)
}
