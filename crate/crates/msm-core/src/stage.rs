//! Stage sets and their resolution against a horizon.

use crate::dsl::ast::{StageAtom, StageSetExpr};
use crate::dsl::printer::format_stage_set;

/// A resolved set of stages: sorted, contiguous, within `[0, T]`.
///
/// [`resolve_stage_set`] never produces an empty set; the empty value only
/// arises through [`StageSet::clamped`], which validation uses so that a
/// range like `1..T` quietly vanishes at `T = 0` instead of failing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StageSet {
    stages: Vec<u32>,
}

impl StageSet {
    pub fn stages(&self) -> &[u32] {
        &self.stages
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn min(&self) -> Option<u32> {
        self.stages.first().copied()
    }

    pub fn contains(&self, stage: u32) -> bool {
        self.stages.binary_search(&stage).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.stages.iter().copied()
    }

    /// Resolve an expression, intersecting the written range with `[0, T]`.
    /// May be empty when `T` substitution empties the range.
    pub fn clamped(expr: &StageSetExpr, horizon: u32) -> StageSet {
        let lo = resolve_atom(expr.lo, horizon);
        let hi = resolve_atom(expr.hi.unwrap_or(expr.lo), horizon);
        let hi = hi.min(horizon);
        if lo > hi {
            return StageSet::default();
        }
        StageSet { stages: (lo..=hi).collect() }
    }
}

/// Stage arithmetic failure (range outside the horizon or inverted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageError {
    pub message: String,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage error: {}", self.message)
    }
}

impl std::error::Error for StageError {}

fn resolve_atom(atom: StageAtom, horizon: u32) -> u32 {
    match atom {
        StageAtom::Lit(v) => v,
        StageAtom::Horizon => horizon,
    }
}

/// Resolve a stage-set expression against horizon `T`. The result is the
/// inclusive range `lo..hi` (a singleton when `hi` is absent), with `T`
/// substituted. Errors when the range inverts or leaves `[0, T]`.
pub fn resolve_stage_set(expr: &StageSetExpr, horizon: u32) -> Result<StageSet, StageError> {
    let lo = resolve_atom(expr.lo, horizon);
    let hi = resolve_atom(expr.hi.unwrap_or(expr.lo), horizon);
    if lo > hi {
        return Err(StageError {
            message: format!("stage set `{}` is empty: {lo} > {hi}", format_stage_set(expr)),
        });
    }
    if hi > horizon {
        return Err(StageError {
            message: format!(
                "stage set `{}` reaches stage {hi}, beyond horizon {horizon}",
                format_stage_set(expr)
            ),
        });
    }
    Ok(StageSet { stages: (lo..=hi).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range(lo: StageAtom, hi: Option<StageAtom>) -> StageSetExpr {
        StageSetExpr { lo, hi }
    }

    #[test]
    fn full_horizon_range() {
        let set =
            resolve_stage_set(&range(StageAtom::Lit(0), Some(StageAtom::Horizon)), 3).unwrap();
        assert_eq!(set.stages(), &[0, 1, 2, 3]);
    }

    #[test]
    fn horizon_singleton() {
        let set = resolve_stage_set(&range(StageAtom::Horizon, None), 3).unwrap();
        assert_eq!(set.stages(), &[3]);
    }

    #[test]
    fn inverted_range_errors() {
        let err =
            resolve_stage_set(&range(StageAtom::Lit(1), Some(StageAtom::Horizon)), 0).unwrap_err();
        assert!(err.message.contains("1 > 0"));
    }

    #[test]
    fn beyond_horizon_errors() {
        assert!(resolve_stage_set(&range(StageAtom::Lit(5), None), 3).is_err());
    }

    #[test]
    fn clamped_allows_empty_and_trims() {
        assert!(StageSet::clamped(&range(StageAtom::Lit(1), Some(StageAtom::Horizon)), 0)
            .is_empty());
        let set = StageSet::clamped(&range(StageAtom::Lit(0), Some(StageAtom::Lit(9))), 2);
        assert_eq!(set.stages(), &[0, 1, 2]);
    }

    #[test]
    fn monotone_in_lower_endpoint() {
        for horizon in 1..=8u32 {
            let all =
                resolve_stage_set(&range(StageAtom::Lit(0), Some(StageAtom::Horizon)), horizon)
                    .unwrap();
            let tail =
                resolve_stage_set(&range(StageAtom::Lit(1), Some(StageAtom::Horizon)), horizon)
                    .unwrap();
            let last = resolve_stage_set(&range(StageAtom::Horizon, None), horizon).unwrap();
            assert!(tail.iter().all(|s| all.contains(s)));
            assert!(last.iter().all(|s| tail.contains(s)));
        }
    }
}
