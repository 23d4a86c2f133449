//! Exact checks, each returning a [`CheckReport`].

use serde_json::{json, Value};
use spinal_core::partition::Caps;
use spinal_core::reconstruct::{
    lemma15_residual, reconstruct_pn_with_diagnostics, reroot_invariance_distance,
};
use spinal_core::spinal::{factorization_report, reversal_distance};
use spinal_core::split::Factor;
use spinal_core::{LevyKernel, PnTable, SplitLaw};

use crate::report::{at_most, timed, CheckReport, Status};
use crate::Result;

/// Exact-zero tolerance for distances and residuals.
pub const EXACT_TOLERANCE: f64 = 1e-10;

/// Largest relative error allowed between a reconstructed and a direct table.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;

pub fn law_parameters(sl: &SplitLaw) -> Value {
    match sl {
        SplitLaw::PdStar(p) => json!({"family": "pdstar", "alpha": p.alpha(), "theta": p.theta()}),
        SplitLaw::Brownian => json!({"family": "brownian"}),
        SplitLaw::Table(t) => json!({"family": "table", "n_max": t.n_max()}),
    }
}

fn with(sl: &SplitLaw, extra: Value) -> Value {
    let mut v = law_parameters(sl);
    if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
        a.extend(b);
    }
    v
}

/// Total variation between the tree law on `[n]` and its re-rooted image.
pub fn reroot_check(sl: &SplitLaw, n: usize) -> Result<CheckReport> {
    timed("reroot", with(sl, json!({"n": n})), EXACT_TOLERANCE, || {
        let d = reroot_invariance_distance(sl, n, &Caps::default())?;
        Ok((json!(d), at_most(d, EXACT_TOLERANCE)))
    })
}

/// Largest reversal distance of `C_m` over `m ≤ n`.
pub fn reversal_check(sl: &SplitLaw, n: usize) -> Result<CheckReport> {
    timed(
        "reversal",
        with(sl, json!({"n": n})),
        EXACT_TOLERANCE,
        || {
            let caps = Caps::default();
            let mut worst: f64 = 0.0;
            for m in 1..=n {
                worst = worst.max(reversal_distance(sl, m, &caps)?);
            }
            Ok((json!(worst), at_most(worst, EXACT_TOLERANCE)))
        },
    )
}

pub fn lemma15_check(sl: &SplitLaw, n_max: usize) -> Result<CheckReport> {
    timed(
        "lemma15",
        with(sl, json!({"n_max": n_max})),
        EXACT_TOLERANCE,
        || {
            let table = match sl {
                SplitLaw::Table(t) if t.n_max() == n_max => t.clone(),
                _ => PnTable::from_law(sl, n_max)?,
            };
            let r = lemma15_residual(&table)?;
            Ok((json!(r), at_most(r, EXACT_TOLERANCE)))
        },
    )
}

pub fn factor_check(sl: &SplitLaw, n_max: usize) -> Result<CheckReport> {
    let report = factorization_report(sl, n_max)?;
    timed(
        "factor",
        with(sl, json!({"n_max": n_max})),
        report.threshold,
        || {
            let factor = report.factor.map(|f| match f {
                Factor::Pd(p) => json!({"law": "pd", "alpha": p.alpha(), "theta": p.theta()}),
                Factor::SingleBlock => json!({"law": "single-block"}),
            });
            Ok((
                json!({"max_deviation": report.max_deviation, "worst": report.worst, "factor": factor}),
                if report.passed {
                    Status::Pass
                } else {
                    Status::Fail
                },
            ))
        },
    )
}

/// Rebuilds the table from the kernel and compares it with the law's own
/// split probabilities.
pub fn reconstruction_check(
    sl: &SplitLaw,
    kernel: &LevyKernel,
    n_max: usize,
) -> Result<CheckReport> {
    timed(
        "consistency",
        with(sl, json!({"n_max": n_max})),
        RECONSTRUCTION_TOLERANCE,
        || {
            let (rebuilt, diag) = reconstruct_pn_with_diagnostics(kernel, n_max)?;
            let direct = PnTable::from_law(sl, n_max)?;
            let err = rebuilt.max_relative_error(&direct)?;
            Ok((
                json!({
                    "max_relative_error": err,
                    "fill_order_discrepancy": diag.fill_order_discrepancy,
                    "normalization_gap": diag.largest_normalization_gap,
                }),
                at_most(err, RECONSTRUCTION_TOLERANCE),
            ))
        },
    )
}
