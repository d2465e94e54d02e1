//! Brute-force reference front: every path, every charge vector on a
//! uniform grid, each scored by the plain model evaluation.

use super::{enumerate_paths, ExactError, FrontPoint, ParetoFront, DEFAULT_PATH_CAP};
use crate::instance::Instance;
use crate::model::{self, RouteSolution};

/// Default bound on the number of evaluated plans.
pub const DEFAULT_ORACLE_CAP: u128 = 50_000_000;

/// Front over all plans whose charge amounts lie on `{0, 1/n, ..., 1}`.
pub fn grid_oracle(inst: &Instance, grid_n: u32, cap: u128) -> Result<ParetoFront, ExactError> {
    let paths = enumerate_paths(&inst.graph, DEFAULT_PATH_CAP)?;
    let steps = grid_n as u128 + 1;
    let needed = paths
        .iter()
        .map(|p| steps.checked_pow(p.len() as u32).unwrap_or(u128::MAX))
        .fold(0u128, u128::saturating_add);
    if grid_n == 0 || needed > cap {
        return Err(ExactError::OracleCap { needed, cap });
    }

    let mut candidates = Vec::new();
    for path in paths {
        let mut digits = vec![0u32; path.len()];
        let mut local = Vec::new();
        loop {
            let mut sol = RouteSolution::transit(path.clone());
            for (&node, &d) in path.iter().zip(&digits) {
                if d > 0 {
                    sol.charge.insert(node, d as f64 / grid_n as f64);
                }
            }
            if let Ok(objectives) = model::evaluate(inst, &sol) {
                local.push(FrontPoint {
                    objectives,
                    solution: sol,
                });
            }
            // Odometer increment; the last position changes fastest.
            let mut k = digits.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] <= grid_n {
                    break;
                }
                digits[k] = 0;
            }
            if digits.iter().all(|&d| d == 0) {
                break;
            }
        }
        // Filtering per path first keeps memory flat; the merge is exact.
        candidates.extend(ParetoFront::from_candidates(local).points);
    }
    Ok(ParetoFront::from_candidates(candidates))
}
