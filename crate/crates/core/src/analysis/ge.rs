use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Method;

/// Architecture family whose constants enter the generalization score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeKind {
    Gnn,
    Rnn,
    Memory,
    Stone,
}

impl From<Method> for GeKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Stone => GeKind::Stone,
            Method::Gnn => GeKind::Gnn,
            Method::Rnn => GeKind::Rnn,
            Method::Memory => GeKind::Memory,
        }
    }
}

impl std::str::FromStr for GeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnn" => Ok(GeKind::Gnn),
            "rnn" => Ok(GeKind::Rnn),
            "memory" => Ok(GeKind::Memory),
            "stone" => Ok(GeKind::Stone),
            other => Err(Error::validation(format!("unknown method kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeScore {
    pub kind: GeKind,
    pub l: usize,
    pub rho: f64,
    pub tau: f64,
    pub c: f64,
    pub d: f64,
    pub r: f64,
    pub n: usize,
    pub ge: f64,
}

/// `(C, D)` per family:
/// gnn `(((1 + 3 rho) tau)^(L-1), L)`, rnn `((1 + 3 rho / sqrt 2)^(L-1), L)`,
/// memory `(rho, 4)`, stone = gnn with `L = 2`, `rho = tau = 1`.
pub fn constants(kind: GeKind, l: usize, rho: f64, tau: f64) -> Result<(f64, f64)> {
    if rho < 1.0 || tau < 1.0 {
        return Err(Error::validation(format!(
            "rho and tau must be at least 1, got {rho} and {tau}"
        )));
    }
    let need_depth = |l: usize| {
        if l < 2 {
            Err(Error::validation(format!("L must be at least 2, got {l}")))
        } else {
            Ok(l)
        }
    };
    Ok(match kind {
        GeKind::Gnn => {
            let l = need_depth(l)?;
            (((1.0 + 3.0 * rho) * tau).powi(l as i32 - 1), l as f64)
        }
        GeKind::Rnn => {
            let l = need_depth(l)?;
            ((1.0 + 3.0 * rho / SQRT_2).powi(l as i32 - 1), l as f64)
        }
        GeKind::Memory => (rho, 4.0),
        GeKind::Stone => (4.0, 2.0),
    })
}

/// `D C R / sqrt(N)`.
pub fn generalization_error(kind: GeKind, l: usize, rho: f64, tau: f64, r: f64, n: usize) -> Result<GeScore> {
    if n == 0 {
        return Err(Error::validation("N must be positive"));
    }
    if !(r >= 0.0) {
        return Err(Error::validation("R must be non-negative"));
    }
    let (c, d) = constants(kind, l, rho, tau)?;
    let (l, rho, tau) = match kind {
        GeKind::Stone => (2, 1.0, 1.0),
        _ => (l, rho, tau),
    };
    Ok(GeScore {
        kind,
        l,
        rho,
        tau,
        c,
        d,
        r,
        n,
        ge: d * c * r / (n as f64).sqrt(),
    })
}

/// Score of a model built from several families: the product of theirs.
pub fn compose(parts: &[GeScore]) -> f64 {
    parts.iter().map(|s| s.ge).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_constants() {
        let g = generalization_error(GeKind::Gnn, 2, 1.0, 1.0, 3.0, 9).unwrap();
        assert_eq!((g.c, g.d), (4.0, 2.0));
        assert!((g.ge - 8.0).abs() < 1e-15);
        let m = generalization_error(GeKind::Memory, 0, 1.0, 1.0, 1.0, 4).unwrap();
        assert_eq!((m.c, m.d, m.ge), (1.0, 4.0, 2.0));
        let r = generalization_error(GeKind::Rnn, 4, 1.0, 1.0, 1.0, 1).unwrap();
        assert!((r.c - (1.0 + 3.0 / SQRT_2).powi(3)).abs() < 1e-12);
        assert_eq!(r.d, 4.0);
        let s = generalization_error(GeKind::Stone, 7, 1.0, 1.0, 1.0, 1).unwrap();
        assert_eq!((s.c, s.d, s.l), (4.0, 2.0, 2));
    }

    #[test]
    fn invalid_inputs() {
        assert!("attention".parse::<GeKind>().is_err());
        assert!(generalization_error(GeKind::Gnn, 1, 1.0, 1.0, 1.0, 1).is_err());
        assert!(generalization_error(GeKind::Gnn, 2, 0.5, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn composite_multiplies() {
        let a = generalization_error(GeKind::Gnn, 2, 1.0, 1.0, 1.0, 4).unwrap();
        let b = generalization_error(GeKind::Memory, 0, 1.0, 1.0, 1.0, 4).unwrap();
        assert!((compose(&[a, b]) - 4.0 * 2.0).abs() < 1e-12);
    }
}
