//! Flattened design vectors: `(x0, y0, L, t, p)` per component, in order.

use crate::error::{Error, Result};
use crate::geometry::{Component, VARS_PER_COMPONENT};

pub const VARS: usize = VARS_PER_COMPONENT;

/// Names of the per-component variables, in storage order.
pub const VAR_NAMES: [&str; VARS] = ["x0", "y0", "L", "t", "p"];

pub fn flatten(comps: &[Component]) -> Vec<f64> {
    comps.iter().flat_map(|c| c.to_vars()).collect()
}

pub fn unflatten(d: &[f64]) -> Result<Vec<Component>> {
    if d.is_empty() || !d.len().is_multiple_of(VARS) {
        return Err(Error::DimensionMismatch {
            what: "design vector length (multiple of 5)",
            expected: VARS * (d.len() / VARS).max(1),
            got: d.len(),
        });
    }
    Ok(d.chunks_exact(VARS).map(Component::from_vars).collect())
}

/// Total number of design variables for `nc` components.
pub fn variable_count(nc: usize) -> usize {
    VARS * nc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_unflatten() {
        let comps = vec![
            Component::new(0.1, 0.2, 0.3, 0.04, 0.5),
            Component::new(1.0, 0.5, 0.7, 0.1, -0.2),
        ];
        let d = flatten(&comps);
        assert_eq!(d.len(), variable_count(2));
        assert_eq!(d[5..], [1.0, 0.5, 0.7, 0.1, -0.2]);
        assert_eq!(unflatten(&d).unwrap(), comps);
        assert!(unflatten(&d[..7]).is_err());
        assert!(unflatten(&[]).is_err());
    }
}
