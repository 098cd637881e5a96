//! Tokunaga coefficients `T_k`, their partial sums `S_k`, and the
//! root-order parameter `p` of a geometric tree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest order for which coefficient tables are kept.
pub const MAX_ORDER: u32 = 160;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("root-order parameter p = {0} must lie in (0, 1)")]
    RootOrder(f64),
    #[error("criticality parameter c = {0} must be at least 1")]
    Criticality(f64),
    #[error("Tokunaga coefficient T_{index} = {value} must be finite and non-negative")]
    Coefficient { index: u32, value: f64 },
    #[error("geometric ratio c = {0} must be finite and positive")]
    Ratio(f64),
    #[error("geometric tail needs a non-empty head and a non-negative ratio, got {0}")]
    Tail(f64),
    #[error("geometric parameter r = {0} must lie in (0, 1]")]
    Geometric(f64),
    #[error("keep probability q = {0} must lie in [0, 1]")]
    KeepProbability(f64),
    #[error("order {0} outside the supported range 1..={1}")]
    OrderOutOfRange(u32, u32),
    #[error("side orders of an order-{0} branch are undefined: T_1..T_{{K-1}} are all zero")]
    UndefinedSideDistribution(u32),
}

/// How coefficients continue beyond an explicit head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Zero,
    /// `T_{n+j} = T_n * ratio^j` where `n` is the head length.
    Geometric {
        ratio: f64,
    },
}

/// The coefficient sequence `T_1, T_2, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficients {
    /// `T_k = a c^(k-1)`.
    Geometric {
        a: f64,
        c: f64,
    },
    Explicit {
        head: Vec<f64>,
        tail: Tail,
    },
}

impl Coefficients {
    fn value(&self, k: u32) -> f64 {
        debug_assert!(k >= 1);
        match self {
            Coefficients::Geometric { a, c } => a * c.powi(k as i32 - 1),
            Coefficients::Explicit { head, tail } => {
                let n = head.len() as u32;
                if k <= n {
                    head[(k - 1) as usize]
                } else {
                    match tail {
                        Tail::Zero => 0.0,
                        Tail::Geometric { ratio } => head[(n - 1) as usize] * ratio.powi((k - n) as i32),
                    }
                }
            }
        }
    }
}

/// Parameters `({T_k}, p)` of a geometric tree, with precomputed tables.
#[derive(Clone, Debug)]
pub struct TokunagaParams {
    p: f64,
    coefficients: Coefficients,
    /// `t[k] = T_k`, `t[0] = 0`.
    t: Vec<f64>,
    /// `s[k] = S_k = 1 + T_1 + … + T_k`.
    s: Vec<f64>,
    /// `side_cdf[K][i - 1] = P(side order <= i)` for an order-`K` branch.
    side_cdf: Vec<Vec<f64>>,
    max_order: u32,
}

impl PartialEq for TokunagaParams {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.coefficients == other.coefficients
    }
}

impl Serialize for TokunagaParams {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("TokunagaParams", 2)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("coefficients", &self.coefficients)?;
        st.end()
    }
}

impl TokunagaParams {
    pub fn new(p: f64, coefficients: Coefficients) -> Result<Self, ParamError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(ParamError::RootOrder(p));
        }
        match &coefficients {
            Coefficients::Geometric { a, c } => {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(ParamError::Coefficient { index: 1, value: *a });
                }
                if !(c.is_finite() && *c > 0.0) {
                    return Err(ParamError::Ratio(*c));
                }
            }
            Coefficients::Explicit { head, tail } => {
                if let Tail::Geometric { ratio } = tail {
                    if head.is_empty() || !(ratio.is_finite() && *ratio >= 0.0) {
                        return Err(ParamError::Tail(*ratio));
                    }
                }
            }
        }
        let mut t = vec![0.0];
        let mut s = vec![1.0];
        let mut max_order = MAX_ORDER;
        for k in 1..=MAX_ORDER {
            let v = coefficients.value(k);
            if v.is_nan() || v < 0.0 {
                return Err(ParamError::Coefficient { index: k, value: v });
            }
            let next = s[(k - 1) as usize] + v;
            if !v.is_finite() || !next.is_finite() {
                // Orders beyond this point cannot be represented.
                max_order = k - 1;
                break;
            }
            t.push(v);
            s.push(next);
        }
        let mut side_cdf = vec![Vec::new(); max_order as usize + 1];
        for big_k in 2..=max_order {
            let total = s[(big_k - 1) as usize] - 1.0;
            if total <= 0.0 {
                continue;
            }
            let mut acc = 0.0;
            let mut cdf = Vec::with_capacity(big_k as usize - 1);
            for i in 1..big_k {
                acc += t[(big_k - i) as usize];
                cdf.push(acc / total);
            }
            if let Some(last) = cdf.last_mut() {
                *last = 1.0;
            }
            side_cdf[big_k as usize] = cdf;
        }
        Ok(TokunagaParams {
            p,
            coefficients,
            t,
            s,
            side_cdf,
            max_order,
        })
    }

    /// Explicit head with a zero tail.
    pub fn explicit(p: f64, head: &[f64]) -> Result<Self, ParamError> {
        TokunagaParams::new(
            p,
            Coefficients::Explicit {
                head: head.to_vec(),
                tail: Tail::Zero,
            },
        )
    }

    /// `T_k = a c^(k-1)`.
    pub fn geometric(p: f64, a: f64, c: f64) -> Result<Self, ParamError> {
        TokunagaParams::new(p, Coefficients::Geometric { a, c })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    /// Largest order with finite tables.
    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn check_order(&self, k: u32) -> Result<(), ParamError> {
        if k == 0 || k > self.max_order {
            Err(ParamError::OrderOutOfRange(k, self.max_order))
        } else {
            Ok(())
        }
    }

    /// `T_k`, with `T_0 = 0`.
    pub fn t(&self, k: u32) -> f64 {
        self.t[k as usize]
    }

    /// `S_k`, with `S_0 = 1`.
    pub fn s(&self, k: u32) -> f64 {
        self.s[k as usize]
    }

    /// Probability `1 / S_{K-1}` that an order-`K` branch ends at the next
    /// vertex.
    pub fn termination_prob(&self, order: u32) -> f64 {
        1.0 / self.s(order - 1)
    }

    /// `P(ord = k) = p (1 - p)^(k - 1)`.
    pub fn order_pmf(&self, k: u32) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.p * (1.0 - self.p).powi(k as i32 - 1)
        }
    }

    pub(crate) fn side_cdf(&self, order: u32) -> &[f64] {
        &self.side_cdf[order as usize]
    }

    /// True when this is the critical family `p = 1/2`, `T_k = (c-1)c^(k-1)`.
    pub fn is_critical(&self) -> bool {
        self.p == 0.5 && matches!(self.coefficients, Coefficients::Geometric { a, c } if c >= 1.0 && a == c - 1.0)
    }
}

/// The critical Tokunaga family: `p = 1/2`, `T_k = (c-1) c^(k-1)`, so that
/// `S_k = c^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalTokunaga {
    pub c: f64,
}

impl CriticalTokunaga {
    pub fn new(c: f64) -> Result<Self, ParamError> {
        if !(c.is_finite() && c >= 1.0) {
            return Err(ParamError::Criticality(c));
        }
        Ok(CriticalTokunaga { c })
    }

    pub fn params(&self) -> TokunagaParams {
        TokunagaParams::geometric(0.5, self.c - 1.0, self.c).expect("critical family is valid")
    }
}

/// Side-branch order law of an order-`K` branch: entry `i - 1` is
/// `p_{K,i} = T_{K-i} / (T_1 + … + T_{K-1})`.
pub fn side_order_distribution(params: &TokunagaParams, order: u32) -> Result<Vec<f64>, ParamError> {
    if order < 2 {
        return Err(ParamError::OrderOutOfRange(order, params.max_order()));
    }
    params.check_order(order)?;
    let total = params.s(order - 1) - 1.0;
    if total <= 0.0 {
        return Err(ParamError::UndefinedSideDistribution(order));
    }
    Ok((1..order).map(|i| params.t(order - i) / total).collect())
}
