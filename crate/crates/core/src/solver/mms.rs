use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mesh::Point2;

type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Point2) -> [f64; 2] + Send + Sync>;

/// A manufactured solution: `u`, its gradient and `f = -Δu`.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad: VectorFn,
    pub f: ScalarFn,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ExactSolution")
    }
}

impl ExactSolution {
    pub fn new(
        u: impl Fn(Point2) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point2) -> [f64; 2] + Send + Sync + 'static,
        f: impl Fn(Point2) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            u: Arc::new(u),
            grad: Arc::new(grad),
            f: Arc::new(f),
        }
    }

    pub fn u(&self, x: Point2) -> f64 {
        (self.u)(x)
    }

    pub fn grad(&self, x: Point2) -> [f64; 2] {
        (self.grad)(x)
    }

    pub fn f(&self, x: Point2) -> f64 {
        (self.f)(x)
    }
}

/// Named manufactured solutions selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Manufactured {
    /// `sin(πx) sin(πy)`
    SinSin,
    /// A fixed polynomial of exact degree `d` built from ridge functions.
    Poly(usize),
}

/// Ridge directions `(a, b, c)` for `Σ w (a x + b y + c)^d`.
const RIDGES: [(f64, f64, f64, f64); 3] = [
    (1.0, 2.0, 0.25, 1.0),
    (-3.0, 1.0, 0.5, 0.5),
    (0.5, -1.0, -0.2, -0.75),
];

impl Manufactured {
    pub fn solution(self) -> ExactSolution {
        match self {
            Self::SinSin => ExactSolution::new(
                |x| (PI * x.x).sin() * (PI * x.y).sin(),
                |x| {
                    [
                        PI * (PI * x.x).cos() * (PI * x.y).sin(),
                        PI * (PI * x.x).sin() * (PI * x.y).cos(),
                    ]
                },
                |x| 2.0 * PI * PI * (PI * x.x).sin() * (PI * x.y).sin(),
            ),
            Self::Poly(d) => {
                let di = d as i32;
                let df = d as f64;
                ExactSolution::new(
                    move |x| {
                        RIDGES
                            .iter()
                            .map(|&(a, b, c, w)| w * (a * x.x + b * x.y + c).powi(di))
                            .sum()
                    },
                    move |x| {
                        let mut g = [0.0; 2];
                        if d == 0 {
                            return g;
                        }
                        for &(a, b, c, w) in &RIDGES {
                            let s = w * df * (a * x.x + b * x.y + c).powi(di - 1);
                            g[0] += a * s;
                            g[1] += b * s;
                        }
                        g
                    },
                    move |x| {
                        if d < 2 {
                            return 0.0;
                        }
                        -RIDGES
                            .iter()
                            .map(|&(a, b, c, w)| {
                                w * df * (df - 1.0) * (a * a + b * b) * (a * x.x + b * x.y + c).powi(di - 2)
                            })
                            .sum::<f64>()
                    },
                )
            }
        }
    }

    /// Polynomial degree, if the solution is a polynomial.
    pub fn degree(self) -> Option<usize> {
        match self {
            Self::SinSin => None,
            Self::Poly(d) => Some(d),
        }
    }
}

impl fmt::Display for Manufactured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SinSin => f.write_str("sinsin"),
            Self::Poly(d) => write!(f, "poly:{d}"),
        }
    }
}

impl FromStr for Manufactured {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "sinsin" {
            return Ok(Self::SinSin);
        }
        if let Some(d) = s.strip_prefix("poly:") {
            return d
                .parse()
                .map(Self::Poly)
                .map_err(|_| format!("bad polynomial degree in '{s}'"));
        }
        Err(format!("unknown manufactured solution '{s}' (expected sinsin or poly:<deg>)"))
    }
}

impl TryFrom<String> for Manufactured {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Manufactured> for String {
    fn from(m: Manufactured) -> String {
        m.to_string()
    }
}
