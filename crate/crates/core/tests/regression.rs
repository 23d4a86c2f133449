//! Pinned values for a law that is not invariant under re-rooting,
//! PD*(0.75, −0.8). The constants come from a separate brute-force
//! computation (own EPRF normalised by explicit summation, own tree
//! enumeration and re-rooting).

use spinal_core::reconstruct::{lemma15_residual, reroot_invariance_distance, PnTable};
use spinal_core::spinal::reversal_distance;
use spinal_core::{Caps, SplitLaw};

const REROOT_TV_N4: f64 = 0.02805877575131078;
const IDENTITY_RESIDUAL_N5: f64 = 0.006891629131900889;
const REVERSAL_TV_N5: f64 = 0.054312805033714606;

fn law() -> SplitLaw {
    SplitLaw::pdstar(0.75, -0.8).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

#[test]
fn reroot_distance_n4() {
    let d = reroot_invariance_distance(&law(), 4, &Caps::default()).unwrap();
    assert!(close(d, REROOT_TV_N4), "{d}");
}

#[test]
fn rerooting_identity_residual_up_to_5() {
    let table = PnTable::from_law(&law(), 5).unwrap();
    let r = lemma15_residual(&table).unwrap();
    assert!(close(r, IDENTITY_RESIDUAL_N5), "{r}");
}

#[test]
fn reversal_distance_n5() {
    let d = reversal_distance(&law(), 5, &Caps::default()).unwrap();
    assert!(close(d, REVERSAL_TV_N5), "{d}");
}

#[test]
fn invariance_and_identity_vanish_together() {
    let caps = Caps::default();
    let laws = [
        SplitLaw::stable(0.6).unwrap(),
        SplitLaw::stable(0.9).unwrap(),
        SplitLaw::Brownian,
        SplitLaw::pdstar(0.75, -0.8).unwrap(),
        SplitLaw::pdstar(0.6, -0.3).unwrap(),
        SplitLaw::pdstar(0.9, -1.2).unwrap(),
    ];
    for sl in laws {
        let reroot = (2..=5)
            .map(|n| reroot_invariance_distance(&sl, n, &caps).unwrap())
            .fold(0.0, f64::max);
        let lemma = lemma15_residual(&PnTable::from_law(&sl, 5).unwrap()).unwrap();
        assert_eq!(reroot < 1e-10, lemma < 1e-10, "{sl:?}: {reroot} vs {lemma}");
    }
}
