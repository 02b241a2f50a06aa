//! Empirical search for extremal sets: exhaustive scans over all small
//! subsets, seeded random sampling, simulated annealing, and log-log
//! exponent fitting.
//!
//! Every entry point is deterministic given its parameters and seed, and
//! sample-level work is keyed by sample index, so distributing a scan over
//! any number of workers cannot change its output.

use crate::fp::{ElementSet, Prime};
use crate::rng::SplitMix64;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Additive side of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumOp {
    Sum,
    Diff,
}

/// Multiplicative side of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulOp {
    Prod,
    Ratio,
}

/// Which pair of set sizes the scans minimize over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Objective {
    pub additive: SumOp,
    pub multiplicative: MulOp,
}

impl Default for Objective {
    fn default() -> Self {
        Objective { additive: SumOp::Sum, multiplicative: MulOp::Prod }
    }
}

/// One evaluated set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub p: u64,
    pub n: u64,
    /// Present for extremal records (exhaustive minima, annealing bests).
    pub set: Option<Vec<u64>>,
    /// Additive set size.
    pub s: u64,
    /// Multiplicative set size.
    pub m: u64,
    /// `max(s, m)`.
    pub objective: u64,
    /// `objective / n^(12/11)`.
    pub normalized: f64,
    pub seed: u64,
}

/// CSV header matching [`ScanRecord::to_csv_row`].
pub const CSV_HEADER: &str = "p,n,s,m,objective,normalized,seed";

impl ScanRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{}",
            self.p, self.n, self.s, self.m, self.objective, self.normalized, self.seed
        )
    }
}

fn normalized_objective(objective: u64, n: u64) -> f64 {
    objective as f64 / (n as f64).powf(12.0 / 11.0)
}

/// Evaluate the objective on a set of members of `F_p*`.
pub fn evaluate(prime: Prime, members: &[u64], objective: Objective) -> Result<(u64, u64, u64)> {
    let a = ElementSet::from_nonzero_members(prime, members)?;
    let s = match objective.additive {
        SumOp::Sum => a.sumset(&a)?,
        SumOp::Diff => a.difference_set(&a)?,
    }
    .cardinality() as u64;
    let m = match objective.multiplicative {
        MulOp::Prod => a.product_set(&a)?,
        MulOp::Ratio => a.ratio_set(&a)?,
    }
    .cardinality() as u64;
    Ok((s, m, s.max(m)))
}

fn check_hypothesis(prime: Prime, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptySet);
    }
    if n >= prime.value() {
        return Err(Error::Invalid(format!(
            "cannot draw {n} distinct nonzero elements mod {}",
            prime.value()
        )));
    }
    if (n as u128) * (n as u128) > prime.value() as u128 {
        return Err(Error::Hypothesis(format!(
            "n = {n} exceeds the square-root range of p = {}",
            prime.value()
        )));
    }
    Ok(())
}

fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// Default cap on exhaustive enumeration size.
pub const DEFAULT_SCAN_BUDGET: u128 = 10_000_000;

/// Scan every `n`-subset of `F_p*` and return the objective minimizer
/// (ties broken toward the lexicographically smallest set) together with
/// the full histogram of objective values.
pub fn exhaustive_scan(
    prime: Prime,
    n: u64,
    objective: Objective,
    budget: u128,
) -> Result<(ScanRecord, BTreeMap<u64, u64>)> {
    check_hypothesis(prime, n)?;
    let count = binomial_u128(prime.value() - 1, n).unwrap_or(u128::MAX);
    if count > budget {
        return Err(Error::Budget { required: count, budget });
    }

    let n = n as usize;
    let mut members: Vec<u64> = (1..=n as u64).collect();
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut best: Option<ScanRecord> = None;
    loop {
        let (s, m, obj) = evaluate(prime, &members, objective)?;
        *histogram.entry(obj).or_insert(0) += 1;
        // Lexicographic enumeration order makes strict improvement keep the
        // lexicographically smallest minimizer.
        if best.as_ref().is_none_or(|b| obj < b.objective) {
            best = Some(ScanRecord {
                p: prime.value(),
                n: n as u64,
                set: Some(members.clone()),
                s,
                m,
                objective: obj,
                normalized: normalized_objective(obj, n as u64),
                seed: 0,
            });
        }
        // Next combination of {1, ..., p-1}.
        let p_max = prime.value() - 1;
        let mut i = n;
        loop {
            if i == 0 {
                return Ok((best.expect("at least one subset"), histogram));
            }
            i -= 1;
            if members[i] < p_max - (n - 1 - i) as u64 {
                members[i] += 1;
                for j in i + 1..n {
                    members[j] = members[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Draw a sorted `n`-subset of `[1, p)` by partial Fisher-Yates shuffle.
pub fn random_subset(prime: Prime, n: u64, rng: &mut SplitMix64, buf: &mut Vec<u64>) -> Vec<u64> {
    let pv = prime.value();
    buf.clear();
    buf.extend(1..pv);
    let len = buf.len() as u64;
    for i in 0..n {
        let j = i + rng.next_below(len - i);
        buf.swap(i as usize, j as usize);
    }
    let mut out: Vec<u64> = buf[..n as usize].to_vec();
    out.sort_unstable();
    out
}

/// Run `body` for every index in `0..count`, splitting indices over
/// `workers` threads; results come back in index order regardless of the
/// worker count.
pub fn parallel_map_indexed<T, F>(count: usize, workers: usize, body: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.max(1).min(count.max(1));
    if workers <= 1 || count <= 1 {
        return (0..count).map(body).collect();
    }
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let body = &body;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut i = w;
                while i < count {
                    out.push((i, body(i)));
                    i += workers;
                }
                out
            }));
        }
        for h in handles {
            for (i, v) in h.join().expect("worker panicked") {
                slots[i] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("all indices filled")).collect()
}

/// Seeded random sampling of `n`-subsets. Sample `i` uses the derived
/// stream `(seed, i)`, so the output is a pure function of
/// `(p, n, samples, seed)` and in particular independent of `workers`.
pub fn random_scan(
    prime: Prime,
    n: u64,
    samples: u64,
    seed: u64,
    objective: Objective,
    workers: usize,
) -> Result<Vec<ScanRecord>> {
    check_hypothesis(prime, n)?;
    let results = parallel_map_indexed(samples as usize, workers, |i| {
        let sample_seed = crate::rng::mix64(seed ^ crate::rng::mix64(i as u64 + 1));
        let mut rng = SplitMix64::stream(seed, i as u64);
        let mut buf = Vec::new();
        let members = random_subset(prime, n, &mut rng, &mut buf);
        let (s, m, obj) = evaluate(prime, &members, objective).expect("members are valid");
        ScanRecord {
            p: prime.value(),
            n,
            set: None,
            s,
            m,
            objective: obj,
            normalized: normalized_objective(obj, n),
            seed: sample_seed,
        }
    });
    Ok(results)
}

/// Geometric cooling schedule.
#[derive(Debug, Clone)]
pub struct AnnealSchedule {
    pub steps: u64,
    /// Initial temperature; if unset, the set size is used.
    pub t0: Option<f64>,
    pub cooling: f64,
    pub restarts: u32,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule { steps: 20_000, t0: None, cooling: 0.995, restarts: 1 }
    }
}

/// Simulated annealing over `n`-subsets with single-element swap moves.
/// Uphill moves are accepted with probability `exp(-delta / T)`. The
/// best-seen record is monotone and never worse than the seeded start.
pub fn anneal_extremal(
    prime: Prime,
    n: u64,
    schedule: &AnnealSchedule,
    seed: u64,
    objective: Objective,
) -> Result<ScanRecord> {
    check_hypothesis(prime, n)?;
    if schedule.restarts == 0 {
        return Err(Error::Invalid("annealing needs at least one restart".to_string()));
    }
    let t0 = schedule.t0.unwrap_or(n as f64);
    let mut buf = Vec::new();
    let mut best: Option<(u64, Vec<u64>, u64, u64)> = None; // (obj, set, s, m)

    for restart in 0..schedule.restarts {
        let mut rng = SplitMix64::stream(seed, restart as u64);
        let mut members = random_subset(prime, n, &mut rng, &mut buf);
        let (mut s, mut m, mut obj) = evaluate(prime, &members, objective)?;
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, members.clone(), s, m));
        }
        let mut temperature = t0;
        for _ in 0..schedule.steps {
            let idx = rng.next_below(n) as usize;
            let replacement = loop {
                let cand = 1 + rng.next_below(prime.value() - 1);
                if !members.contains(&cand) {
                    break cand;
                }
            };
            let old = members[idx];
            members[idx] = replacement;
            let (ns, nm, nobj) = evaluate(prime, &members, objective)?;
            let accept = if nobj <= obj {
                true
            } else {
                let delta = (nobj - obj) as f64;
                rng.next_f64() < (-delta / temperature.max(f64::MIN_POSITIVE)).exp()
            };
            if accept {
                (s, m, obj) = (ns, nm, nobj);
                if best.as_ref().is_none_or(|b| obj < b.0) {
                    let mut sorted = members.clone();
                    sorted.sort_unstable();
                    best = Some((obj, sorted, s, m));
                }
            } else {
                members[idx] = old;
            }
            temperature *= schedule.cooling;
        }
    }

    let (obj, set, s, m) = best.expect("at least one restart ran");
    Ok(ScanRecord {
        p: prime.value(),
        n,
        set: Some(set),
        s,
        m,
        objective: obj,
        normalized: normalized_objective(obj, n),
        seed,
    })
}

/// Least-squares fit of `log objective` against `log n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// The fitted `(log n, log objective)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Fit the growth exponent from per-size minima. Needs at least three
/// distinct sizes.
pub fn fit_exponent(minima: &[(u64, u64)]) -> Result<ExponentFit> {
    let mut sizes: Vec<u64> = minima.iter().map(|&(n, _)| n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::TooFewSizes { need: 3, got: sizes.len() });
    }
    let points: Vec<(f64, f64)> = minima
        .iter()
        .map(|&(n, obj)| ((n as f64).ln(), (obj as f64).ln()))
        .collect();
    let len = points.len() as f64;
    let mean_x: f64 = points.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y: f64 = points.iter().map(|p| p.1).sum::<f64>() / len;
    let var: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let cov: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = cov / var;
    let intercept = mean_y - slope * mean_x;
    let residual = (points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum::<f64>()
        / len)
        .sqrt();
    Ok(ExponentFit { slope, intercept, residual, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: u64) -> Prime {
        Prime::new(v).unwrap()
    }

    #[test]
    fn singleton_scan() {
        let (record, hist) = exhaustive_scan(p(19), 1, Objective::default(), 1 << 20).unwrap();
        assert_eq!(record.objective, 1);
        assert_eq!(hist[&1], 18);
    }

    #[test]
    fn exhaustive_scan_covers_all_subsets() {
        let (record, hist) = exhaustive_scan(p(11), 3, Objective::default(), 1 << 20).unwrap();
        // C(10, 3) = 120 subsets in total.
        assert_eq!(hist.values().sum::<u64>(), 120);
        assert!(record.set.is_some());
        assert!(record.objective >= 2 * 3 - 1);
    }

    #[test]
    fn geometric_progression_bounds_the_p19_minimum() {
        let (s, m, obj) = evaluate(p(19), &[1, 2, 4, 8], Objective::default()).unwrap();
        assert_eq!(m, 7);
        assert_eq!(s, 10);
        assert_eq!(obj, 10);
        let (record, _) = exhaustive_scan(p(19), 4, Objective::default(), 1 << 20).unwrap();
        assert!(record.objective <= 10);
    }

    #[test]
    fn budget_refusal_reports_the_count() {
        match exhaustive_scan(p(1009), 10, Objective::default(), 1000) {
            Err(Error::Budget { required, budget }) => {
                assert_eq!(budget, 1000);
                assert!(required > 1000);
            }
            other => panic!("expected budget refusal, got {other:?}"),
        }
    }

    #[test]
    fn hypothesis_filter_rejects_oversized_draws() {
        assert!(matches!(
            random_scan(p(11), 4, 1, 0, Objective::default(), 1),
            Err(Error::Hypothesis(_))
        ));
        assert!(matches!(
            anneal_extremal(p(11), 4, &AnnealSchedule::default(), 0, Objective::default()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn random_scan_is_deterministic_and_worker_independent() {
        let a = random_scan(p(1009), 12, 40, 99, Objective::default(), 1).unwrap();
        let b = random_scan(p(1009), 12, 40, 99, Objective::default(), 1).unwrap();
        let c = random_scan(p(1009), 12, 40, 99, Objective::default(), 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.len(), 40);
        assert!(random_scan(p(1009), 12, 0, 99, Objective::default(), 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn records_respect_known_floors() {
        let records = random_scan(p(1009), 15, 60, 3, Objective::default(), 2).unwrap();
        for r in records {
            assert!(r.s >= 2 * 15 - 1);
            assert!(r.m >= 15);
            assert_eq!(r.objective, r.s.max(r.m));
        }
    }

    #[test]
    fn annealing_with_zero_steps_returns_the_seeded_start() {
        let schedule = AnnealSchedule { steps: 0, t0: None, cooling: 0.995, restarts: 1 };
        let rec = anneal_extremal(p(1009), 8, &schedule, 5, Objective::default()).unwrap();
        let mut rng = SplitMix64::stream(5, 0);
        let mut buf = Vec::new();
        let start = random_subset(p(1009), 8, &mut rng, &mut buf);
        assert_eq!(rec.set.as_deref(), Some(start.as_slice()));
    }

    #[test]
    fn annealing_never_beats_its_own_best_monotonically() {
        let short = AnnealSchedule { steps: 50, ..Default::default() };
        let long = AnnealSchedule { steps: 2000, ..Default::default() };
        let a = anneal_extremal(p(1009), 10, &short, 7, Objective::default()).unwrap();
        let b = anneal_extremal(p(1009), 10, &long, 7, Objective::default()).unwrap();
        assert!(b.objective <= a.objective);
    }

    #[test]
    fn annealing_matches_the_exhaustive_minimum_on_a_tiny_field() {
        let (exact, _) = exhaustive_scan(p(11), 3, Objective::default(), 1 << 20).unwrap();
        let schedule = AnnealSchedule { steps: 3000, restarts: 3, ..Default::default() };
        let annealed = anneal_extremal(p(11), 3, &schedule, 42, Objective::default()).unwrap();
        assert_eq!(annealed.objective, exact.objective);
    }

    #[test]
    fn objective_variants_change_the_measured_sizes() {
        let diff_ratio = Objective { additive: SumOp::Diff, multiplicative: MulOp::Ratio };
        let (s, m, _) = evaluate(p(19), &[1, 2, 4, 8], diff_ratio).unwrap();
        // Difference and ratio sets are symmetric and contain 0 resp. 1.
        assert!(s >= 7 && m >= 7);
    }

    #[test]
    fn fit_recovers_an_exact_power_law() {
        let fit = fit_exponent(&[(2, 4), (4, 16), (8, 64)]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_on_linear_growth_tends_to_slope_one() {
        let pts: Vec<(u64, u64)> = [64u64, 128, 256, 512]
            .iter()
            .map(|&n| (n, 2 * n - 1))
            .collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn fit_requires_three_sizes() {
        assert!(matches!(
            fit_exponent(&[(2, 4), (4, 16)]),
            Err(Error::TooFewSizes { need: 3, got: 2 })
        ));
    }

    #[test]
    fn csv_rows_are_stable() {
        let rec = ScanRecord {
            p: 19,
            n: 4,
            set: None,
            s: 10,
            m: 7,
            objective: 10,
            normalized: normalized_objective(10, 4),
            seed: 1,
        };
        assert_eq!(rec.to_csv_row(), "19,4,10,7,10,2.203978,1");
    }
}
