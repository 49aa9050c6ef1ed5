//! The continuous parallel Schwarz iteration.
//!
//! On each subdomain the error solves `e'' = 0`, so every iterate is affine
//! and is stored by its two endpoint values. One step replaces the boundary
//! data of subdomain `j` by the previous iterate of its neighbours:
//! `e_j(a_j) <- e_{j-1}(a_j)` and `e_j(b_j) <- e_{j+1}(b_j)`, with
//! `e_1(a_1) = e_N(b_N) = 0`. All subdomains read only the previous iterate.
//!
//! [`SolveMode::FiniteDifference`] replaces the closed-form evaluation with a
//! three-point finite-difference solve on each subdomain. It is slower and
//! exists only as an independent check of the affine formula.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Decomposition;
use crate::numerics::Scalar;
use crate::operator::{InterfaceVector, Pair};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsmError {
    #[error("dimension mismatch: decomposition has {expected} subdomains, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("x = {x} lies outside subdomain {index} = [{lo}, {hi}]")]
    OutOfSubdomain {
        index: usize,
        x: String,
        lo: String,
        hi: String,
    },
}

/// Endpoint values of the affine iterate on subdomain `index` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainSolution<S> {
    pub index: usize,
    pub left_value: S,
    pub right_value: S,
}

impl<S: Scalar> SubdomainSolution<S> {
    pub fn new(index: usize, left_value: S, right_value: S) -> Self {
        SubdomainSolution {
            index,
            left_value,
            right_value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMode {
    #[default]
    ClosedForm,
    /// Three-point finite differences with this many uniform interior nodes
    /// (plus the evaluation point).
    FiniteDifference { points: usize },
}

/// Initial error `e^0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Initialization<S> {
    /// `e^0 = 1` everywhere; the worst case for the infinity norm.
    Ones,
    Zero,
    /// Endpoint values per subdomain.
    Endpoints(Vec<Pair<S>>),
    /// Endpoint values drawn uniformly from `{k / 1000 : -1000 <= k <= 1000}`.
    /// The draws are rational, so both backends see the same data.
    Random {
        seed: u64,
    },
}

impl<S: Scalar> Initialization<S> {
    pub fn solutions(
        &self,
        decomposition: &Decomposition<S>,
    ) -> Result<Vec<SubdomainSolution<S>>, PsmError> {
        let n = decomposition.subdomains();
        let constant = |v: S| {
            (0..n)
                .map(|j| SubdomainSolution::new(j, v.clone(), v.clone()))
                .collect()
        };
        match self {
            Initialization::Ones => Ok(constant(S::one())),
            Initialization::Zero => Ok(constant(S::zero())),
            Initialization::Endpoints(values) => {
                if values.len() != n {
                    return Err(PsmError::DimensionMismatch {
                        expected: n,
                        found: values.len(),
                    });
                }
                Ok(values
                    .iter()
                    .enumerate()
                    .map(|(j, [l, r])| SubdomainSolution::new(j, l.clone(), r.clone()))
                    .collect())
            }
            Initialization::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut draw = || S::from_ratio(rng.gen_range(-1000..=1000), 1000);
                Ok((0..n)
                    .map(|j| SubdomainSolution::new(j, draw(), draw()))
                    .collect())
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Initialization::Ones => "ones".into(),
            Initialization::Zero => "zero".into(),
            Initialization::Endpoints(_) => "endpoints".into(),
            Initialization::Random { seed } => format!("random({seed})"),
        }
    }
}

/// `e_j(x) = left + (x - a_j) / (b_j - a_j) * (right - left)`.
pub fn evaluate<S: Scalar>(
    solution: &SubdomainSolution<S>,
    decomposition: &Decomposition<S>,
    x: &S,
) -> Result<S, PsmError> {
    let (lo, hi) = endpoints(solution, decomposition, x)?;
    let t = (x.clone() - lo.clone()) / (hi.clone() - lo.clone());
    Ok(solution.left_value.clone()
        + t * (solution.right_value.clone() - solution.left_value.clone()))
}

/// Evaluates the subdomain solution at `x` by solving the discrete problem
/// `u'' = 0` on a grid of `points` uniform interior nodes plus `x`.
pub fn evaluate_finite_difference<S: Scalar>(
    solution: &SubdomainSolution<S>,
    decomposition: &Decomposition<S>,
    x: &S,
    points: usize,
) -> Result<S, PsmError> {
    let (lo, hi) = endpoints(solution, decomposition, x)?;
    if *x == lo {
        return Ok(solution.left_value.clone());
    }
    if *x == hi {
        return Ok(solution.right_value.clone());
    }

    let width = hi.clone() - lo.clone();
    let spacing = S::from_int(points as i64 + 1);
    let mut nodes: Vec<S> = (0..=points + 1)
        .map(|k| lo.clone() + S::from_int(k as i64) * width.clone() / spacing.clone())
        .collect();
    nodes.push(x.clone());
    nodes.sort_by(|p, q| p.partial_cmp(q).unwrap_or(Ordering::Equal));
    nodes.dedup();

    let u = solve_discrete_laplace(
        &nodes,
        solution.left_value.clone(),
        solution.right_value.clone(),
    );
    let at = nodes
        .iter()
        .position(|node| node == x)
        .expect("evaluation point is a grid node");
    Ok(u[at].clone())
}

/// Three-point discretization of `u'' = 0` on the (possibly nonuniform)
/// `nodes` with Dirichlet data at both ends, solved by the Thomas algorithm.
/// Returns the nodal values including the two boundary values.
fn solve_discrete_laplace<S: Scalar>(nodes: &[S], left: S, right: S) -> Vec<S> {
    let m = nodes.len();
    let interior = m.saturating_sub(2);
    if interior == 0 {
        return vec![left, right];
    }
    let h: Vec<S> = nodes
        .windows(2)
        .map(|w| w[1].clone() - w[0].clone())
        .collect();
    // Row i couples u_{i-1}, u_i, u_{i+1}:
    // -u_{i-1}/h_{i-1} + (1/h_{i-1} + 1/h_i) u_i - u_{i+1}/h_i = 0.
    let mut diag = Vec::with_capacity(interior);
    let mut upper = Vec::with_capacity(interior);
    let mut rhs = Vec::with_capacity(interior);
    for i in 1..=interior {
        let wl = S::one() / h[i - 1].clone();
        let wr = S::one() / h[i].clone();
        diag.push(wl.clone() + wr.clone());
        upper.push(-wr.clone());
        let mut b = S::zero();
        if i == 1 {
            b = b + wl * left.clone();
        }
        if i == interior {
            b = b + wr * right.clone();
        }
        rhs.push(b);
    }
    // Forward elimination; the sub-diagonal of row i is -1/h_{i-1}.
    for k in 1..interior {
        let lower = -(S::one() / h[k].clone());
        let factor = lower / diag[k - 1].clone();
        diag[k] = diag[k].clone() - factor.clone() * upper[k - 1].clone();
        rhs[k] = rhs[k].clone() - factor * rhs[k - 1].clone();
    }
    let mut u = vec![S::zero(); interior];
    u[interior - 1] = rhs[interior - 1].clone() / diag[interior - 1].clone();
    for k in (0..interior - 1).rev() {
        u[k] = (rhs[k].clone() - upper[k].clone() * u[k + 1].clone()) / diag[k].clone();
    }
    let mut out = Vec::with_capacity(m);
    out.push(left);
    out.extend(u);
    out.push(right);
    out
}

fn endpoints<S: Scalar>(
    solution: &SubdomainSolution<S>,
    decomposition: &Decomposition<S>,
    x: &S,
) -> Result<(S, S), PsmError> {
    let j = solution.index;
    let lo = decomposition.left()[j].clone();
    let hi = decomposition.right()[j].clone();
    if *x < lo || *x > hi {
        return Err(PsmError::OutOfSubdomain {
            index: j + 1,
            x: x.to_literal(),
            lo: lo.to_literal(),
            hi: hi.to_literal(),
        });
    }
    Ok((lo, hi))
}

fn check_len<S>(decomposition: &Decomposition<S>, found: usize) -> Result<(), PsmError>
where
    S: Scalar,
{
    if found != decomposition.subdomains() {
        return Err(PsmError::DimensionMismatch {
            expected: decomposition.subdomains(),
            found,
        });
    }
    Ok(())
}

pub fn psm_step<S: Scalar>(
    decomposition: &Decomposition<S>,
    current: &[SubdomainSolution<S>],
) -> Result<Vec<SubdomainSolution<S>>, PsmError> {
    psm_step_with(decomposition, current, SolveMode::ClosedForm)
}

pub fn psm_step_with<S: Scalar>(
    decomposition: &Decomposition<S>,
    current: &[SubdomainSolution<S>],
    mode: SolveMode,
) -> Result<Vec<SubdomainSolution<S>>, PsmError> {
    check_len(decomposition, current.len())?;
    let n = current.len();
    let eval = |sol: &SubdomainSolution<S>, x: &S| match mode {
        SolveMode::ClosedForm => evaluate(sol, decomposition, x),
        SolveMode::FiniteDifference { points } => {
            evaluate_finite_difference(sol, decomposition, x, points)
        }
    };
    (0..n)
        .map(|j| {
            let left = if j == 0 {
                S::zero()
            } else {
                eval(&current[j - 1], &decomposition.left()[j])?
            };
            let right = if j == n - 1 {
                S::zero()
            } else {
                eval(&current[j + 1], &decomposition.right()[j])?
            };
            Ok(SubdomainSolution::new(j, left, right))
        })
        .collect()
}

/// Values of the subdomain solutions at the interface points, in the
/// ordering of [`Decomposition::interface_points`].
pub fn trace_to_interface_vector<S: Scalar>(
    decomposition: &Decomposition<S>,
    solutions: &[SubdomainSolution<S>],
) -> Result<InterfaceVector<S>, PsmError> {
    check_len(decomposition, solutions.len())?;
    let points = decomposition.interface_points();
    let blocks = solutions
        .iter()
        .enumerate()
        .map(|(j, sol)| {
            Ok([
                evaluate(sol, decomposition, &points[2 * j])?,
                evaluate(sol, decomposition, &points[2 * j + 1])?,
            ])
        })
        .collect::<Result<Vec<_>, PsmError>>()?;
    Ok(InterfaceVector::from_blocks(blocks))
}

/// `samples` equispaced points `(x, e_j(x))` on `[a_j, b_j]`, endpoints
/// included.
pub fn sample_curve<S: Scalar>(
    solution: &SubdomainSolution<S>,
    decomposition: &Decomposition<S>,
    samples: usize,
) -> Vec<(S, S)> {
    let lo = decomposition.left()[solution.index].clone();
    let hi = decomposition.right()[solution.index].clone();
    let segments = S::from_int(samples.max(2) as i64 - 1);
    (0..samples.max(2))
        .map(|k| {
            let x =
                lo.clone() + S::from_int(k as i64) * (hi.clone() - lo.clone()) / segments.clone();
            let y = evaluate(solution, decomposition, &x).expect("sample inside subdomain");
            (x, y)
        })
        .collect()
}

/// Iterates `e^0, e^1, ..., e^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsmTrace<S> {
    decomposition: Decomposition<S>,
    init: String,
    iterations: Vec<Vec<SubdomainSolution<S>>>,
}

impl<S: Scalar> PsmTrace<S> {
    pub fn run(
        decomposition: &Decomposition<S>,
        init: &Initialization<S>,
        steps: usize,
    ) -> Result<Self, PsmError> {
        Self::run_with(decomposition, init, steps, SolveMode::ClosedForm)
    }

    pub fn run_with(
        decomposition: &Decomposition<S>,
        init: &Initialization<S>,
        steps: usize,
        mode: SolveMode,
    ) -> Result<Self, PsmError> {
        let mut iterations = Vec::with_capacity(steps + 1);
        iterations.push(init.solutions(decomposition)?);
        for _ in 0..steps {
            let next = psm_step_with(decomposition, iterations.last().unwrap(), mode)?;
            iterations.push(next);
        }
        Ok(PsmTrace {
            decomposition: decomposition.clone(),
            init: init.describe(),
            iterations,
        })
    }

    pub fn decomposition(&self) -> &Decomposition<S> {
        &self.decomposition
    }

    pub fn init(&self) -> &str {
        &self.init
    }

    pub fn iterations(&self) -> &[Vec<SubdomainSolution<S>>] {
        &self.iterations
    }

    pub fn interface_vector(&self, n: usize) -> InterfaceVector<S> {
        trace_to_interface_vector(&self.decomposition, &self.iterations[n])
            .expect("trace entries match the decomposition")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{parse_rational, Exact};
    use crate::operator::SchwarzOperator;

    fn q(s: &str) -> Exact {
        parse_rational(s).unwrap()
    }

    fn dec(n: usize, delta: &str) -> Decomposition<Exact> {
        Decomposition::new(n, q("1"), q(delta)).unwrap()
    }

    fn flat(items: &[&str]) -> Vec<Exact> {
        items.iter().map(|s| q(s)).collect()
    }

    #[test]
    fn one_step_from_ones() {
        let d = dec(3, "1/4");
        let trace = PsmTrace::run(&d, &Initialization::Ones, 1).unwrap();
        assert_eq!(
            trace.interface_vector(1).flatten(),
            flat(&["0", "3/4", "1", "1", "3/4", "0"])
        );
        let via_matrix = SchwarzOperator::new(d.clone())
            .apply(&InterfaceVector::ones(3))
            .unwrap();
        assert_eq!(trace.interface_vector(1), via_matrix);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let d = dec(5, "1/4");
        let trace = PsmTrace::run(&d, &Initialization::Zero, 6).unwrap();
        for sols in trace.iterations() {
            assert!(sols
                .iter()
                .all(|s| s.left_value == q("0") && s.right_value == q("0")));
        }
        assert_eq!(trace.interface_vector(0), InterfaceVector::zeros(5));
    }

    #[test]
    fn two_steps_two_subdomains() {
        let d = dec(2, "1/2");
        let trace = PsmTrace::run(&d, &Initialization::Ones, 2).unwrap();
        assert_eq!(trace.interface_vector(0), InterfaceVector::ones(2));
        assert_eq!(
            trace.interface_vector(2).flatten(),
            flat(&["0", "1/4", "1/4", "0"])
        );
    }

    #[test]
    fn boundary_values_pinned() {
        let d = dec(6, "2/5");
        let trace = PsmTrace::run(&d, &Initialization::Random { seed: 7 }, 5).unwrap();
        for sols in &trace.iterations()[1..] {
            assert_eq!(sols[0].left_value, q("0"));
            assert_eq!(sols[5].right_value, q("0"));
        }
    }

    #[test]
    fn evaluate_examples() {
        let d = dec(2, "1/2");
        let s = SubdomainSolution::new(1, q("1/2"), q("0"));
        assert_eq!(evaluate(&s, &d, &q("1/2")).unwrap(), q("1/2"));
        assert_eq!(evaluate(&s, &d, &q("1")).unwrap(), q("1/4"));
        let s = SubdomainSolution::new(0, q("0"), q("1"));
        assert_eq!(evaluate(&s, &d, &q("1/2")).unwrap(), q("1/2"));
        assert!(matches!(
            evaluate(&s, &d, &q("5/4")),
            Err(PsmError::OutOfSubdomain { index: 1, .. })
        ));
    }

    #[test]
    fn finite_difference_agrees_with_affine() {
        let d = dec(4, "1/4");
        let s = SubdomainSolution::new(2, q("3/7"), q("-2/9"));
        for x in ["3/2", "13/8", "7/4", "2", "9/4"] {
            let x = q(x);
            for points in [0, 1, 4, 9] {
                assert_eq!(
                    evaluate_finite_difference(&s, &d, &x, points).unwrap(),
                    evaluate(&s, &d, &x).unwrap()
                );
            }
        }
        let a = PsmTrace::run(&d, &Initialization::Random { seed: 3 }, 6).unwrap();
        let b = PsmTrace::run_with(
            &d,
            &Initialization::Random { seed: 3 },
            6,
            SolveMode::FiniteDifference { points: 5 },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn maximum_principle_on_samples() {
        let d = Decomposition::new(5, 1.0, 0.3).unwrap();
        let trace = PsmTrace::run(&d, &Initialization::Random { seed: 11 }, 4).unwrap();
        for sols in trace.iterations() {
            for s in sols {
                let hi = s.left_value.max(s.right_value);
                let lo = s.left_value.min(s.right_value);
                for (_, y) in sample_curve(s, &d, 17) {
                    assert!(y <= hi + 1e-15 && y >= lo - 1e-15);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatches() {
        let d = dec(3, "1/4");
        let two = Initialization::<Exact>::Ones
            .solutions(&dec(2, "1/4"))
            .unwrap();
        assert!(matches!(
            psm_step(&d, &two),
            Err(PsmError::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
        assert!(Initialization::Endpoints(vec![[q("1"), q("1")]])
            .solutions(&d)
            .is_err());
    }

    #[test]
    fn random_init_is_reproducible() {
        let d = dec(4, "1/4");
        let a = Initialization::<Exact>::Random { seed: 42 }
            .solutions(&d)
            .unwrap();
        let b = Initialization::<Exact>::Random { seed: 42 }
            .solutions(&d)
            .unwrap();
        let c = Initialization::<Exact>::Random { seed: 43 }
            .solutions(&d)
            .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let f = Initialization::<f64>::Random { seed: 42 }
            .solutions(&Decomposition::new(4, 1.0, 0.25).unwrap())
            .unwrap();
        for (x, y) in a.iter().zip(&f) {
            assert_eq!(x.left_value.to_f64(), y.left_value);
        }
    }
}
