//! Inequality statistics over a wealth vector: Gini index (plain and with
//! zero-wealth agents excluded), top/bottom wealth shares, the zero-wealth
//! fraction, and Lorenz curves.
//!
//! The Gini index is the normalized mean absolute difference
//!
//! G = Σᵢⱼ |wᵢ − wⱼ| / (2 N Σᵢ wᵢ),
//!
//! computed here through the algebraically identical sorted-rank form
//! Σₖ (2k − N − 1) w₍ₖ₎ / (N Σ w) with w₍ₖ₎ ascending, which is
//! O(N log N) instead of O(N²). Anchoring the terms at the smallest value
//! makes a constant vector come out exactly 0 and a single-holder vector
//! exactly (N − 1)/N.

use serde::Serialize;

/// Canonical population fractions reported throughout: the top 1%, the top
/// 10%, and the bottom 90%.
pub const TOP_SHARE_FRACTIONS: [f64; 2] = [0.01, 0.10];
pub const BOTTOM_SHARE_FRACTION: f64 = 0.90;

/// Number of agents in "the top fraction q": ceil(q·N), at least one.
fn ceil_count(q: f64, n: usize) -> usize {
    debug_assert!(q > 0.0 && q <= 1.0);
    let k = (q * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

/// Number of agents in "the bottom fraction r": floor(r·N).
fn floor_count(r: f64, n: usize) -> usize {
    debug_assert!((0.0..=1.0).contains(&r));
    let k = (r * n as f64 + 1e-9).floor() as usize;
    k.min(n)
}

fn sorted_ascending(wealth: &[f64]) -> Vec<f64> {
    let mut sorted = wealth.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted
}

/// Gini index of a non-negative wealth vector; `None` when the vector is
/// empty or carries no wealth, where the index is undefined.
pub fn gini(wealth: &[f64]) -> Option<f64> {
    let sorted = sorted_ascending(wealth);
    gini_sorted(&sorted)
}

/// Sorted-input Gini; `sorted` must be ascending.
pub(crate) fn gini_sorted(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let total: f64 = sorted.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let w_min = sorted[0];
    let n_f = n as f64;
    let mut weighted = 0.0;
    for (i, &w) in sorted.iter().enumerate() {
        let rank_weight = (2 * (i + 1)) as f64 - n_f - 1.0;
        weighted += rank_weight * (w - w_min);
    }
    Some(weighted / (n_f * total))
}

/// Gini over the sub-population with wealth at or above `threshold`;
/// `None` when no agent qualifies.
pub fn gini_excluding_zwa(wealth: &[f64], threshold: f64) -> Option<f64> {
    let survivors: Vec<f64> = wealth.iter().copied().filter(|&w| w >= threshold).collect();
    if survivors.is_empty() {
        return None;
    }
    let sorted = sorted_ascending(&survivors);
    gini_sorted(&sorted)
}

/// Share of total wealth held by the ceil(q·N) richest agents.
pub fn top_share(wealth: &[f64], q: f64) -> Option<f64> {
    let sorted = sorted_ascending(wealth);
    top_share_sorted(&sorted, q)
}

pub(crate) fn top_share_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    if n == 0 || total.is_nan() || total <= 0.0 {
        return None;
    }
    let k = ceil_count(q, n);
    let top: f64 = sorted[n - k..].iter().sum();
    Some(top / total)
}

/// Share of total wealth held by the floor(r·N) poorest agents.
pub fn bottom_share(wealth: &[f64], r: f64) -> Option<f64> {
    let sorted = sorted_ascending(wealth);
    bottom_share_sorted(&sorted, r)
}

pub(crate) fn bottom_share_sorted(sorted: &[f64], r: f64) -> Option<f64> {
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    if n == 0 || total.is_nan() || total <= 0.0 {
        return None;
    }
    let k = floor_count(r, n);
    let bottom: f64 = sorted[..k].iter().sum();
    Some(bottom / total)
}

/// Fraction of agents whose wealth lies strictly below `threshold`.
pub fn zero_wealth_fraction(wealth: &[f64], threshold: f64) -> f64 {
    if wealth.is_empty() {
        return 0.0;
    }
    let below = wealth.iter().filter(|&&w| w < threshold).count();
    below as f64 / wealth.len() as f64
}

/// Lorenz curve: cumulative wealth fraction L held by the poorest fraction F
/// of agents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorenzCurve {
    points: Vec<(f64, f64)>,
}

impl LorenzCurve {
    /// The N+1 points (k/N, L_k) for k = 0..N, starting exactly at (0, 0)
    /// and ending exactly at (1, 1).
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Gini index as the area ratio a/(a + b) of the Lorenz diagram, where a
    /// lies between the diagonal and the curve and b below the curve, with b
    /// integrated by trapezoids. Since a + b = 1/2 this is
    /// 1 − Σₖ (L₍ₖ₋₁₎ + Lₖ)/N.
    pub fn gini_from_area(&self) -> f64 {
        let n = self.points.len() - 1;
        let mut trapezoids = 0.0;
        for pair in self.points.windows(2) {
            trapezoids += pair[0].1 + pair[1].1;
        }
        1.0 - trapezoids / n as f64
    }
}

/// Build the Lorenz curve; `None` when total wealth is not positive.
pub fn lorenz_curve(wealth: &[f64]) -> Option<LorenzCurve> {
    let sorted = sorted_ascending(wealth);
    lorenz_curve_sorted(&sorted)
}

pub(crate) fn lorenz_curve_sorted(sorted: &[f64]) -> Option<LorenzCurve> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    let mut running = 0.0;
    for &w in sorted {
        running += w;
        cumulative.push(running);
    }
    let total = running;
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let n_f = n as f64;
    let points = cumulative
        .iter()
        .enumerate()
        .map(|(k, &c)| (k as f64 / n_f, c / total))
        .collect();
    Some(LorenzCurve { points })
}

/// The full set of inequality statistics reported per population snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityReport {
    pub gini: f64,
    /// Gini over agents at or above the zero-wealth threshold; `None` when
    /// that sub-population is empty.
    pub gini_excl_zwa: Option<f64>,
    pub top_1pct_share: f64,
    pub top_10pct_share: f64,
    pub bottom_90pct_share: f64,
    pub zero_wealth_fraction: f64,
}

impl InequalityReport {
    /// Compute every metric from one snapshot; `None` when total wealth is
    /// not positive.
    pub fn from_wealth(wealth: &[f64], zwa_threshold: f64) -> Option<InequalityReport> {
        let sorted = sorted_ascending(wealth);
        InequalityReport::from_sorted(&sorted, zwa_threshold)
    }

    /// Same as [`InequalityReport::from_wealth`] on an already ascending
    /// vector, sharing one sort across all metrics.
    pub(crate) fn from_sorted(sorted: &[f64], zwa_threshold: f64) -> Option<InequalityReport> {
        let n = sorted.len();
        let gini = gini_sorted(sorted)?;
        let first_surviving = sorted.partition_point(|&w| w < zwa_threshold);
        let gini_excl_zwa = gini_sorted(&sorted[first_surviving..]);
        Some(InequalityReport {
            gini,
            gini_excl_zwa,
            top_1pct_share: top_share_sorted(sorted, TOP_SHARE_FRACTIONS[0])?,
            top_10pct_share: top_share_sorted(sorted, TOP_SHARE_FRACTIONS[1])?,
            bottom_90pct_share: bottom_share_sorted(sorted, BOTTOM_SHARE_FRACTION)?,
            zero_wealth_fraction: first_surviving as f64 / n as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force evaluation of the normalized mean absolute difference,
    /// independent of the sorted-rank implementation. Compensated summation
    /// keeps the O(N²) accumulation exact enough to serve as an oracle.
    pub(crate) fn gini_double_sum(wealth: &[f64]) -> Option<f64> {
        let n = wealth.len();
        if n == 0 {
            return None;
        }
        let total: f64 = wealth.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return None;
        }
        let mut sum = 0.0;
        let mut compensation = 0.0;
        for &wi in wealth {
            for &wj in wealth {
                let term = (wi - wj).abs();
                let t = sum + term;
                if sum.abs() >= term.abs() {
                    compensation += (sum - t) + term;
                } else {
                    compensation += (term - t) + sum;
                }
                sum = t;
            }
        }
        Some(0.5 * (sum + compensation) / (n as f64 * total))
    }

    #[test]
    fn equal_wealth_gini_is_exactly_zero() {
        assert_eq!(gini(&[0.3; 17]), Some(0.0));
        assert_eq!(gini(&[1.0, 1.0]), Some(0.0));
    }

    #[test]
    fn single_holder_gini_is_exact() {
        for n in [2usize, 4, 10, 1000] {
            let mut w = vec![0.0; n];
            w[n / 2] = 1.0;
            let expect = (n as f64 - 1.0) / n as f64;
            assert_eq!(gini(&w), Some(expect), "n = {n}");
        }
    }

    #[test]
    fn gini_matches_double_sum_hand_case() {
        let w = [0.1, 0.2, 0.3, 0.4];
        // Sum over ordered pairs of |wi - wj| is 2.0, so G = 0.5*2.0/(4*1.0).
        let g = gini(&w).unwrap();
        assert!((g - 0.25).abs() < 1e-12);
        let oracle = gini_double_sum(&w).unwrap();
        assert!((g - oracle).abs() < 1e-12);
    }

    #[test]
    fn gini_undefined_without_wealth() {
        assert_eq!(gini(&[]), None);
        assert_eq!(gini(&[0.0, 0.0]), None);
    }

    #[test]
    fn zwa_exclusion_cases() {
        let thr = 1e-7;
        // Nobody excluded: both routes agree.
        let w = [0.2, 0.5, 0.3];
        assert_eq!(gini_excluding_zwa(&w, thr), gini(&w));
        // Survivors are equal.
        assert_eq!(gini_excluding_zwa(&[0.0, 0.0, 0.5, 0.5], thr), Some(0.0));
        // Condensed state leaves a single survivor.
        assert_eq!(gini_excluding_zwa(&[0.0, 1e-12, 3.0], thr), Some(0.0));
        // Empty sub-population.
        assert_eq!(gini_excluding_zwa(&[1e-9, 1e-10], thr), None);
    }

    #[test]
    fn top_share_cases() {
        assert_eq!(top_share(&[1.0, 2.0, 3.0], 1.0), Some(1.0));
        let s = top_share(&[1.0, 1.0, 1.0, 7.0], 0.25).unwrap();
        assert!((s - 0.7).abs() < 1e-15);
        let equal = vec![2.5; 1000];
        let s = top_share(&equal, 0.1).unwrap();
        assert!((s - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fractional_counts_are_robust_to_rounding() {
        // 0.1 * 1000 sits one ulp above 100; naive ceil would give 101.
        assert_eq!(ceil_count(0.1, 1000), 100);
        assert_eq!(ceil_count(0.01, 300), 3);
        assert_eq!(ceil_count(1.0, 7), 7);
        assert_eq!(ceil_count(0.15, 10), 2);
        assert_eq!(floor_count(0.9, 1000), 900);
        // 0.3 * 10 sits one ulp below 3.
        assert_eq!(floor_count(0.3, 10), 3);
        assert_eq!(floor_count(0.9, 15), 13);
    }

    #[test]
    fn complementary_shares_sum_to_one() {
        let w: Vec<f64> = (0..997)
            .map(|i| ((i * 2654435761usize) % 1000) as f64 / 1000.0)
            .collect();
        for q in [0.01, 0.1, 0.25] {
            let top = top_share(&w, q).unwrap();
            let bottom = bottom_share(&w, 1.0 - q).unwrap();
            assert!((top + bottom - 1.0).abs() < 1e-10, "q = {q}");
        }
    }

    #[test]
    fn zero_wealth_fraction_cases() {
        let thr = 1e-7;
        assert_eq!(zero_wealth_fraction(&[0.5, 0.2, 0.9], thr), 0.0);
        assert_eq!(zero_wealth_fraction(&[0.0, 1e-9, 0.5, 0.5], thr), 0.5);
        assert_eq!(zero_wealth_fraction(&[], thr), 0.0);
    }

    #[test]
    fn fresh_uniform_population_has_no_zero_wealth_agents() {
        use crate::population::{Population, SimConfig};
        let pop = Population::init(&SimConfig::new(100_000, 55)).unwrap();
        let zwa = zero_wealth_fraction(pop.wealth(), 1e-7);
        assert!(zwa < 1e-4, "{zwa}");
    }

    #[test]
    fn condensed_state_counts_all_but_the_holder() {
        let mut w = vec![0.0; 1000];
        w[123] = 500.0;
        assert!(zero_wealth_fraction(&w, 1e-7) >= 0.99);
        assert_eq!(gini_excluding_zwa(&w, 1e-7), Some(0.0));
    }

    #[test]
    fn lorenz_equal_wealth_is_diagonal() {
        let curve = lorenz_curve(&[0.4; 5]).unwrap();
        for &(f, l) in curve.points() {
            assert!((l - f).abs() < 1e-12);
        }
    }

    #[test]
    fn lorenz_single_holder_jumps_at_the_end() {
        let curve = lorenz_curve(&[0.0, 0.0, 0.0, 2.0]).unwrap();
        let pts = curve.points();
        assert_eq!(pts[0], (0.0, 0.0));
        assert_eq!(pts[3].1, 0.0);
        assert!((pts[3].0 - 0.75).abs() < 1e-15);
        assert_eq!(pts[4], (1.0, 1.0));
    }

    #[test]
    fn lorenz_endpoints_exact() {
        let w = [0.3, 1.7, 0.9, 0.01, 2.2];
        let curve = lorenz_curve(&w).unwrap();
        let pts = curve.points();
        assert_eq!(pts.first().unwrap(), &(0.0, 0.0));
        assert_eq!(pts.last().unwrap(), &(1.0, 1.0));
    }

    #[test]
    fn lorenz_area_gini_matches_rank_gini() {
        let w: Vec<f64> = (0..251)
            .map(|i| ((i * 7919) % 997) as f64 / 997.0)
            .collect();
        let n = w.len() as f64;
        let from_area = lorenz_curve(&w).unwrap().gini_from_area();
        let from_ranks = gini(&w).unwrap();
        assert!(
            (from_area - from_ranks).abs() < 1.0 / n + 1e-9,
            "{from_area} vs {from_ranks}"
        );
    }

    #[test]
    fn report_aggregates_consistently() {
        let w = [0.0, 1e-9, 0.2, 0.3, 0.5, 1.0, 4.0, 0.1, 0.1, 0.7];
        let report = InequalityReport::from_wealth(&w, 1e-7).unwrap();
        assert_eq!(report.gini, gini(&w).unwrap());
        assert_eq!(report.gini_excl_zwa, gini_excluding_zwa(&w, 1e-7));
        assert_eq!(report.top_1pct_share, top_share(&w, 0.01).unwrap());
        assert_eq!(report.top_10pct_share, top_share(&w, 0.10).unwrap());
        assert_eq!(report.bottom_90pct_share, bottom_share(&w, 0.90).unwrap());
        assert_eq!(report.zero_wealth_fraction, 0.2);
    }

    #[test]
    fn report_none_without_wealth() {
        assert!(InequalityReport::from_wealth(&[0.0, 0.0], 1e-7).is_none());
    }
}
