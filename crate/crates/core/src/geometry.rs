//! Overlapping decomposition of `(0, L)` into `N` equal subdomains.
//!
//! Subdomain `j` (1-based) is `(a_j, b_j)` with
//! `a_j = (j - 1)(ell - delta)` and `b_j = a_j + ell`, so neighbours overlap by
//! exactly `delta` and `L = N ell - (N - 1) delta`.

use serde_json::json;
use thiserror::Error;

use crate::numerics::{NumericsError, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid geometry: need N >= 2 subdomains (got {0})")]
    TooFewSubdomains(usize),
    #[error("invalid geometry: overlap delta must be positive (got {0})")]
    NonPositiveOverlap(String),
    #[error("invalid geometry: overlap delta = {delta} must be smaller than ell = {ell}")]
    OverlapNotSmallerThanSubdomain { ell: String, delta: String },
    #[error("invalid geometry: ell = {ell} < 2 delta = {twice_delta}; only adjacent subdomains may overlap")]
    NonAdjacentOverlap { ell: String, twice_delta: String },
    #[error("malformed decomposition document: {0}")]
    Document(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A validated decomposition. Endpoints are evaluated from closed formulas,
/// never accumulated.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<S> {
    subdomains: usize,
    ell: S,
    delta: S,
    length: S,
    left: Vec<S>,
    right: Vec<S>,
}

impl<S: Scalar> Decomposition<S> {
    pub fn new(subdomains: usize, ell: S, delta: S) -> Result<Self, GeometryError> {
        if subdomains < 2 {
            return Err(GeometryError::TooFewSubdomains(subdomains));
        }
        if delta <= S::zero() {
            return Err(GeometryError::NonPositiveOverlap(delta.to_literal()));
        }
        if delta >= ell {
            return Err(GeometryError::OverlapNotSmallerThanSubdomain {
                ell: ell.to_literal(),
                delta: delta.to_literal(),
            });
        }
        let twice_delta = delta.clone() + delta.clone();
        if ell < twice_delta {
            return Err(GeometryError::NonAdjacentOverlap {
                ell: ell.to_literal(),
                twice_delta: twice_delta.to_literal(),
            });
        }

        let stride = ell.clone() - delta.clone();
        let left: Vec<S> = (0..subdomains)
            .map(|j| S::from_int(j as i64) * stride.clone())
            .collect();
        let right = left.iter().map(|a| a.clone() + ell.clone()).collect();
        let n = S::from_int(subdomains as i64);
        let length = n.clone() * ell.clone() - (n - S::one()) * delta.clone();

        Ok(Decomposition {
            subdomains,
            ell,
            delta,
            length,
            left,
            right,
        })
    }

    /// Number of subdomains `N`.
    pub fn subdomains(&self) -> usize {
        self.subdomains
    }

    pub fn ell(&self) -> &S {
        &self.ell
    }

    pub fn delta(&self) -> &S {
        &self.delta
    }

    /// Total length `L`.
    pub fn length(&self) -> &S {
        &self.length
    }

    /// Left endpoints `a_1, ..., a_N`.
    pub fn left(&self) -> &[S] {
        &self.left
    }

    /// Right endpoints `b_1, ..., b_N`.
    pub fn right(&self) -> &[S] {
        &self.right
    }

    /// `delta / ell`, the only parameter the iteration matrix depends on.
    pub fn overlap_ratio(&self) -> S {
        self.delta.clone() / self.ell.clone()
    }

    /// `ceil(N / 2)`.
    pub fn half_ceil(&self) -> usize {
        self.subdomains.div_ceil(2)
    }

    /// `floor(N / 2)`.
    pub fn half_floor(&self) -> usize {
        self.subdomains / 2
    }

    /// Coordinates of the `2N` interface-vector components, block by block:
    /// `(a_1, a_2)`, then `(b_{j-1}, a_{j+1})` for interior `j`, then
    /// `(b_{N-1}, b_N)`.
    pub fn interface_points(&self) -> Vec<S> {
        let n = self.subdomains;
        let mut points = Vec::with_capacity(2 * n);
        for j in 0..n {
            let lo = if j == 0 {
                self.left[0].clone()
            } else {
                self.right[j - 1].clone()
            };
            let hi = if j == n - 1 {
                self.right[n - 1].clone()
            } else {
                self.left[j + 1].clone()
            };
            points.push(lo);
            points.push(hi);
        }
        points
    }

    pub fn to_f64(&self) -> Decomposition<f64> {
        let conv = |v: &[S]| v.iter().map(Scalar::to_f64).collect();
        Decomposition {
            subdomains: self.subdomains,
            ell: self.ell.to_f64(),
            delta: self.delta.to_f64(),
            length: self.length.to_f64(),
            left: conv(&self.left),
            right: conv(&self.right),
        }
    }

    /// Flat key-value document with fields `N, ell, delta, L, a, b`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "N": self.subdomains,
            "ell": self.ell.to_json(),
            "delta": self.delta.to_json(),
            "L": self.length.to_json(),
            "a": self.left.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "b": self.right.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }

    /// Rebuilds a decomposition from [`to_json`](Self::to_json) output. The
    /// derived fields are recomputed and must agree with the document.
    pub fn from_json(doc: &serde_json::Value) -> Result<Self, GeometryError> {
        let field = |key: &str| {
            doc.get(key)
                .ok_or_else(|| GeometryError::Document(format!("missing field `{key}`")))
        };
        let scalar = |v: &serde_json::Value| -> Result<S, GeometryError> {
            match v {
                serde_json::Value::String(s) => Ok(S::parse_literal(s)?),
                serde_json::Value::Number(x) => Ok(S::parse_literal(&x.to_string())?),
                other => Err(GeometryError::Document(format!("not a scalar: {other}"))),
            }
        };
        let n = field("N")?
            .as_u64()
            .ok_or_else(|| GeometryError::Document("`N` must be an integer".into()))?;
        let built = Self::new(n as usize, scalar(field("ell")?)?, scalar(field("delta")?)?)?;
        if built.to_json() != *doc {
            return Err(GeometryError::Document(
                "derived fields L, a, b disagree with N, ell, delta".into(),
            ));
        }
        Ok(built)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{parse_rational, Exact};

    fn q(s: &str) -> Exact {
        parse_rational(s).unwrap()
    }

    fn qs(items: &[&str]) -> Vec<Exact> {
        items.iter().map(|s| q(s)).collect()
    }

    #[test]
    fn two_subdomains_half_overlap() {
        let d = Decomposition::new(2, q("1"), q("1/2")).unwrap();
        assert_eq!(*d.length(), q("3/2"));
        assert_eq!(d.left(), qs(&["0", "1/2"]).as_slice());
        assert_eq!(d.right(), qs(&["1", "3/2"]).as_slice());
        assert_eq!(d.interface_points(), qs(&["0", "1/2", "1", "3/2"]));
    }

    #[test]
    fn three_subdomains_quarter_overlap() {
        let d = Decomposition::new(3, q("1"), q("1/4")).unwrap();
        assert_eq!(*d.length(), q("5/2"));
        assert_eq!(d.left(), qs(&["0", "3/4", "3/2"]).as_slice());
        assert_eq!(d.right(), qs(&["1", "7/4", "5/2"]).as_slice());
        assert_eq!(
            d.interface_points(),
            qs(&["0", "3/4", "1", "3/2", "7/4", "5/2"])
        );
    }

    #[test]
    fn rejects_invalid_geometry() {
        assert!(matches!(
            Decomposition::new(3, q("1"), q("3/5")),
            Err(GeometryError::NonAdjacentOverlap { .. })
        ));
        assert!(matches!(
            Decomposition::new(1, q("1"), q("1/4")),
            Err(GeometryError::TooFewSubdomains(1))
        ));
        assert!(matches!(
            Decomposition::new(3, q("1"), q("0")),
            Err(GeometryError::NonPositiveOverlap(_))
        ));
        assert!(matches!(
            Decomposition::new(3, q("1"), q("-1/4")),
            Err(GeometryError::NonPositiveOverlap(_))
        ));
        assert!(matches!(
            Decomposition::new(3, q("1"), q("1")),
            Err(GeometryError::OverlapNotSmallerThanSubdomain { .. })
        ));
        let msg = Decomposition::new(3, 1.0, 0.6).unwrap_err().to_string();
        assert!(msg.contains("ell = "), "{msg}");
    }

    #[test]
    fn endpoints_and_overlaps() {
        for n in 2..=13usize {
            for delta in ["1/10", "1/4", "2/5", "1/2"] {
                let d = Decomposition::new(n, q("3/2"), q(delta) * q("3/2")).unwrap();
                let (a, b) = (d.left(), d.right());
                assert_eq!(a[0], q("0"));
                assert_eq!(b[n - 1], *d.length());
                for j in 0..n - 1 {
                    assert!(a[j] < a[j + 1] && a[j + 1] < b[j] && b[j] < b[j + 1]);
                    assert_eq!(b[j].clone() - a[j + 1].clone(), *d.delta());
                }
                for j in 0..n.saturating_sub(2) {
                    assert!(a[j + 2] >= b[j]);
                }
            }
        }
    }

    #[test]
    fn json_document() {
        let d = Decomposition::new(2, q("1"), q("1/2")).unwrap();
        let doc = d.to_json();
        assert_eq!(
            doc,
            serde_json::json!({
                "N": 2, "ell": "1", "delta": "1/2", "L": "3/2",
                "a": ["0", "1/2"], "b": ["1", "3/2"]
            })
        );
        assert_eq!(Decomposition::<Exact>::from_json(&doc).unwrap(), d);

        let f = Decomposition::new(4, 1.0, 0.25).unwrap();
        let doc = f.to_json();
        assert_eq!(doc["L"], serde_json::json!(3.25));
        assert_eq!(Decomposition::<f64>::from_json(&doc).unwrap(), f);

        let mut tampered = d.to_json();
        tampered["L"] = serde_json::json!("2");
        assert!(Decomposition::<Exact>::from_json(&tampered).is_err());
    }
}
