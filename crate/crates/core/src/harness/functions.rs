use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{AmbientJet, Vec3};

/// Trivariate test functions, restricted to the surface in experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `(e^x + 2 e^{y+z}) / 10`.
    F1,
    /// `sin x sin y sin z`.
    F2,
}

impl TestFunction {
    pub fn value(self, x: Vec3) -> f64 {
        match self {
            TestFunction::F1 => 0.1 * x[0].exp() + 0.2 * (x[1] + x[2]).exp(),
            TestFunction::F2 => x[0].sin() * x[1].sin() * x[2].sin(),
        }
    }

    pub fn jet(self, x: Vec3) -> AmbientJet {
        match self {
            TestFunction::F1 => {
                let ex = x[0].exp();
                let eyz = (x[1] + x[2]).exp();
                let a = 0.1 * ex;
                let b = 0.2 * eyz;
                AmbientJet {
                    value: 0.1 * ex + b,
                    gradient: [a, b, b],
                    hessian: [[a, 0.0, 0.0], [0.0, b, b], [0.0, b, b]],
                }
            }
            TestFunction::F2 => {
                let [sx, sy, sz] = x.map(f64::sin);
                let [cx, cy, cz] = x.map(f64::cos);
                let f = sx * sy * sz;
                AmbientJet {
                    value: f,
                    gradient: [cx * sy * sz, sx * cy * sz, sx * sy * cz],
                    hessian: [
                        [-f, cx * cy * sz, cx * sy * cz],
                        [cx * cy * sz, -f, sx * cy * cz],
                        [cx * sy * cz, sx * cy * cz, -f],
                    ],
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::F1 => "f1",
            TestFunction::F2 => "f2",
        }
    }
}

impl FromStr for TestFunction {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(TestFunction::F1),
            "f2" => Ok(TestFunction::F2),
            _ => Err(HarnessError::UnknownFunction(s.to_string())),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Value, gradient and Hessian of the named test function at `x`.
pub fn test_function(id: &str, x: Vec3) -> Result<AmbientJet, HarnessError> {
    Ok(id.parse::<TestFunction>()?.jet(x))
}
