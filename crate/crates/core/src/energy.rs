//! Multiplicative energy and line-incidence statistics of `A x A`.
//!
//! For `A` in the multiplicative group, every point of `A x A` lies on exactly
//! one line through the origin; the slope `s` carries `n(s)` points whose
//! abscissae form the fiber `A_s = {x in A : s*x in A}`. The module computes
//! these statistics, partitions slopes into dyadic population classes, and
//! exposes the fiber structure of a chosen class.

use crate::fp::{ElementSet, Prime};
use crate::rat::{rat_u, Rat};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Per-slope incidence data for `A x A`: slope -> abscissa fiber.
#[derive(Debug, Clone)]
pub struct LineIncidence {
    prime: Prime,
    fibers: BTreeMap<u64, ElementSet>,
    total_points: u64,
}

impl LineIncidence {
    pub fn prime(&self) -> Prime {
        self.prime
    }

    /// Slopes in ascending order.
    pub fn slopes(&self) -> impl Iterator<Item = u64> + '_ {
        self.fibers.keys().copied()
    }

    pub fn slope_count(&self) -> usize {
        self.fibers.len()
    }

    /// The abscissa fiber of a slope, if the slope is attained.
    pub fn fiber(&self, slope: u64) -> Option<&ElementSet> {
        self.fibers.get(&slope)
    }

    /// `n(slope)`: the number of points of `A x A` on the line.
    pub fn count(&self, slope: u64) -> u64 {
        self.fibers.get(&slope).map_or(0, |f| f.cardinality() as u64)
    }

    /// Total number of points, always `|A|^2`.
    pub fn total_points(&self) -> u64 {
        self.total_points
    }

    /// `sum over slopes of n(slope)^2`, the incidence route to the energy.
    pub fn energy_from_counts(&self) -> u64 {
        self.fibers
            .values()
            .map(|f| (f.cardinality() as u64).pow(2))
            .sum()
    }
}

fn require_multiplicative(a: &ElementSet) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    if a.contains(0) {
        return Err(Error::ZeroMember);
    }
    Ok(())
}

/// Multiplicative energy of `A`: the exact number of ordered quadruples
/// `(a1, a2, a3, a4)` with `a1 * a2 = a3 * a4`.
///
/// Counted by product-value representation counts; independent of the
/// line-incidence route, which must agree with it exactly.
pub fn mult_energy(a: &ElementSet) -> Result<u64> {
    require_multiplicative(a)?;
    let p = a.prime();
    let mut counts = vec![0u32; p.value() as usize];
    for x in a.iter() {
        for y in a.iter() {
            counts[p.mul(x, y) as usize] += 1;
        }
    }
    Ok(counts.iter().map(|&c| (c as u64) * (c as u64)).sum())
}

/// Incidence statistics of `A x A` over lines through the origin.
///
/// Slopes are exactly the ratio set `A : A`; each fiber is found by testing
/// `s * x in A` for `x in A`, so the cost is `O(|A| * #slopes)` with O(1)
/// membership.
pub fn line_statistics(a: &ElementSet) -> Result<LineIncidence> {
    require_multiplicative(a)?;
    let p = a.prime();
    let slopes = a.ratio_set(a)?;
    let mut fibers = BTreeMap::new();
    let mut total = 0u64;
    for s in slopes.iter() {
        let mut fiber = ElementSet::empty(p);
        for x in a.iter() {
            if a.contains(p.mul(s, x)) {
                fiber.insert(x);
            }
        }
        debug_assert!(!fiber.is_empty());
        total += fiber.cardinality() as u64;
        fibers.insert(s, fiber);
    }
    let n = a.cardinality() as u64;
    debug_assert_eq!(total, n * n);
    Ok(LineIncidence { prime: p, fibers, total_points: total })
}

/// One dyadic population class of slopes: every slope in class `j` carries
/// `n` points with `2^(j-1) <= n < 2^j`.
#[derive(Debug, Clone)]
pub struct DyadicGroup {
    pub j: u32,
    /// Slopes in ascending order.
    pub slopes: Vec<u64>,
    /// `L`: number of lines in the class.
    pub line_count: u64,
    /// Lower dyadic bound `2^(j-1)`.
    pub n_lo: u64,
    /// Upper dyadic bound `2^j` (exclusive).
    pub n_hi: u64,
    /// `M`: the class's contribution `sum n(s)^2` to the energy.
    pub energy: u64,
    /// Exact number of points on the class's lines (`sum n(s)`).
    pub point_total: u64,
}

impl DyadicGroup {
    /// Exact mean line population `|P| / L`; the class's representative `N`.
    pub fn mean_population(&self) -> Rat {
        rat_u(self.point_total) / rat_u(self.line_count)
    }
}

/// Partition all attained slopes into dyadic classes, ascending in `j`.
pub fn dyadic_decompose(stats: &LineIncidence) -> Vec<DyadicGroup> {
    let mut by_j: BTreeMap<u32, DyadicGroup> = BTreeMap::new();
    for slope in stats.slopes() {
        let n = stats.count(slope);
        debug_assert!(n >= 1);
        let j = 64 - n.leading_zeros();
        let group = by_j.entry(j).or_insert_with(|| DyadicGroup {
            j,
            slopes: Vec::new(),
            line_count: 0,
            n_lo: 1u64 << (j - 1),
            n_hi: 1u64 << j,
            energy: 0,
            point_total: 0,
        });
        group.slopes.push(slope);
        group.line_count += 1;
        group.energy += n * n;
        group.point_total += n;
    }
    let groups: Vec<DyadicGroup> = by_j.into_values().collect();
    for g in &groups {
        debug_assert!(g.n_lo * g.n_lo * g.line_count <= g.energy);
        debug_assert!(g.energy < g.n_hi * g.n_hi * g.line_count);
    }
    groups
}

/// The group with the largest energy contribution `M`; ties go to the
/// smaller `j` (more lines, smaller populations), keeping traces
/// deterministic. Guaranteed `M >= E / (1 + ceil(log2 |A|))` by pigeonhole.
pub fn select_popular_group(groups: &[DyadicGroup]) -> Option<&DyadicGroup> {
    let mut best: Option<&DyadicGroup> = None;
    for g in groups {
        match best {
            None => best = Some(g),
            Some(b) if g.energy > b.energy => best = Some(g),
            _ => {}
        }
    }
    best
}

/// `1 + ceil(log2 n)` for `n >= 1`: the pigeonhole divisor bounding the
/// number of dyadic classes.
pub fn pigeonhole_divisor(n: u64) -> u64 {
    debug_assert!(n >= 1);
    let ceil_log2 = if n <= 1 { 0 } else { 64 - (n - 1).leading_zeros() };
    1 + ceil_log2 as u64
}

/// The points of `A x A` supported on a chosen family of lines, stored as
/// per-slope abscissa fibers.
#[derive(Debug, Clone)]
pub struct PointSet {
    prime: Prime,
    fibers: BTreeMap<u64, ElementSet>,
    total: u64,
}

impl PointSet {
    /// Restrict incidence statistics to the given slopes.
    pub fn from_slopes<I: IntoIterator<Item = u64>>(
        stats: &LineIncidence,
        slopes: I,
    ) -> PointSet {
        let mut fibers = BTreeMap::new();
        let mut total = 0u64;
        for s in slopes {
            if let Some(f) = stats.fiber(s) {
                total += f.cardinality() as u64;
                fibers.insert(s, f.clone());
            }
        }
        PointSet { prime: stats.prime(), fibers, total }
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn total_points(&self) -> u64 {
        self.total
    }

    pub fn slopes(&self) -> impl Iterator<Item = u64> + '_ {
        self.fibers.keys().copied()
    }

    pub fn slope_fibers(&self) -> &BTreeMap<u64, ElementSet> {
        &self.fibers
    }

    pub fn abscissa_fiber(&self, slope: u64) -> Option<&ElementSet> {
        self.fibers.get(&slope)
    }

    pub fn contains_point(&self, x: u64, y: u64) -> bool {
        if x == 0 {
            return false;
        }
        let slope = self.prime.div(y, x).expect("x is nonzero");
        self.fibers.get(&slope).is_some_and(|f| f.contains(x))
    }

    /// Dilate every point by `r` (slopes are unchanged, fibers dilate).
    pub fn dilate(&self, r: u64) -> Result<PointSet> {
        let mut fibers = BTreeMap::new();
        for (&s, f) in &self.fibers {
            fibers.insert(s, f.dilate(r)?);
        }
        Ok(PointSet { prime: self.prime, fibers, total: self.total })
    }
}

/// Row and column fibers of a point set: `by_abscissa[x]` is the ordinate
/// set `A_x`, `by_ordinate[y]` the abscissa set `A_y`.
#[derive(Debug, Clone)]
pub struct Fibers {
    pub by_abscissa: BTreeMap<u64, ElementSet>,
    pub by_ordinate: BTreeMap<u64, ElementSet>,
}

/// Exact row/column fibers; both sides enumerate every point once, so the
/// fiber cardinalities each sum to `|P|`.
pub fn fibers(points: &PointSet) -> Fibers {
    let p = points.prime();
    let mut by_abscissa: BTreeMap<u64, ElementSet> = BTreeMap::new();
    let mut by_ordinate: BTreeMap<u64, ElementSet> = BTreeMap::new();
    for (&slope, fiber) in points.slope_fibers() {
        for x in fiber.iter() {
            let y = p.mul(slope, x);
            by_abscissa
                .entry(x)
                .or_insert_with(|| ElementSet::empty(p))
                .insert(y);
            by_ordinate
                .entry(y)
                .or_insert_with(|| ElementSet::empty(p))
                .insert(x);
        }
    }
    Fibers { by_abscissa, by_ordinate }
}

/// Slopes whose lines each support at least `|A| / k` points of `A x A`,
/// together with their point set. This is the popular-lines route used when
/// the smallness hypothesis is on the ratio set: no dyadic pigeonholing is
/// needed. The slope list may be empty.
pub fn popular_lines_mode(a: &ElementSet, k: &Rat) -> Result<(Vec<u64>, PointSet)> {
    if k < &rat_u(1) {
        return Err(Error::Invalid(format!(
            "popularity parameter must be >= 1, got {}",
            crate::rat::format_rat(k)
        )));
    }
    let stats = line_statistics(a)?;
    let size = rat_u(a.cardinality() as u64);
    let mut slopes = Vec::new();
    for s in stats.slopes() {
        // n >= |A| / k  <=>  n * k >= |A|
        if rat_u(stats.count(s)) * k.clone() >= size {
            slopes.push(s);
        }
    }
    let points = PointSet::from_slopes(&stats, slopes.iter().copied());
    Ok((slopes, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::Prime;
    use crate::rat::rat_frac;
    use crate::rng::SplitMix64;

    fn set(p: u64, members: &[u64]) -> ElementSet {
        ElementSet::from_members(Prime::new(p).unwrap(), members).unwrap()
    }

    /// Independent oracle: enumerate all ordered quadruples.
    fn energy_by_quadruples(p: u64, members: &[u64]) -> u64 {
        let pr = Prime::new(p).unwrap();
        let mut count = 0u64;
        for &a1 in members {
            for &a2 in members {
                for &a3 in members {
                    for &a4 in members {
                        if pr.mul(a1, a2) == pr.mul(a3, a4) {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    fn random_nonzero_set(rng: &mut SplitMix64, p: u64, n: u64) -> Vec<u64> {
        let mut members: Vec<u64> = Vec::new();
        while (members.len() as u64) < n {
            let x = 1 + rng.next_below(p - 1);
            if !members.contains(&x) {
                members.push(x);
            }
        }
        members
    }

    #[test]
    fn energy_worked_examples() {
        assert_eq!(mult_energy(&set(7, &[1])).unwrap(), 1);
        // Geometric-progression closure: 27 quadruples, checked against the
        // quadruple oracle below as well.
        assert_eq!(mult_energy(&set(7, &[1, 2, 4])).unwrap(), 27);
        assert_eq!(energy_by_quadruples(7, &[1, 2, 4]), 27);
        assert_eq!(mult_energy(&set(7, &[1, 2])).unwrap(), 6);
        assert_eq!(energy_by_quadruples(7, &[1, 2]), 6);
    }

    #[test]
    fn energy_rejects_zero_and_empty() {
        assert_eq!(mult_energy(&set(7, &[0, 1])), Err(Error::ZeroMember));
        let empty = ElementSet::empty(Prime::new(7).unwrap());
        assert_eq!(mult_energy(&empty), Err(Error::EmptySet));
    }

    #[test]
    fn line_statistics_worked_example() {
        let stats = line_statistics(&set(7, &[1, 2, 4])).unwrap();
        let slopes: Vec<u64> = stats.slopes().collect();
        assert_eq!(slopes, vec![1, 2, 4]);
        for s in [1, 2, 4] {
            assert_eq!(stats.count(s), 3);
            assert_eq!(stats.fiber(s).unwrap().to_vec(), vec![1, 2, 4]);
        }
        // Slope 2 carries (1,2), (2,4), (4,1).
        assert_eq!(stats.total_points(), 9);

        let single = line_statistics(&set(7, &[1])).unwrap();
        assert_eq!(single.slopes().collect::<Vec<_>>(), vec![1]);
        assert_eq!(single.count(1), 1);
    }

    #[test]
    fn energy_identity_on_seeded_sets() {
        let mut rng = SplitMix64::new(31);
        for p in [101u64, 1009] {
            for _ in 0..50 {
                let n = 3 + rng.next_below(12);
                let members = random_nonzero_set(&mut rng, p, n);
                let a = set(p, &members);
                let e = mult_energy(&a).unwrap();
                let stats = line_statistics(&a).unwrap();
                assert_eq!(e, stats.energy_from_counts());
                assert_eq!(stats.total_points(), n * n);
                if n <= 8 {
                    assert_eq!(e, energy_by_quadruples(p, &members));
                }
            }
        }
    }

    #[test]
    fn dyadic_decomposition_worked_examples() {
        let stats = line_statistics(&set(7, &[1, 2, 4])).unwrap();
        let groups = dyadic_decompose(&stats);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].j, 2);
        assert_eq!(groups[0].line_count, 3);
        assert_eq!(groups[0].energy, 27);
        assert_eq!(groups[0].point_total, 9);
        assert_eq!((groups[0].n_lo, groups[0].n_hi), (2, 4));

        let single = line_statistics(&set(7, &[1])).unwrap();
        let groups = dyadic_decompose(&single);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].j, 1);
        assert_eq!(groups[0].line_count, 1);
        assert_eq!(groups[0].energy, 1);
    }

    #[test]
    fn dyadic_partition_properties() {
        let mut rng = SplitMix64::new(47);
        for _ in 0..40 {
            let n = 3 + rng.next_below(15);
            let members = random_nonzero_set(&mut rng, 101, n);
            let a = set(101, &members);
            let stats = line_statistics(&a).unwrap();
            let groups = dyadic_decompose(&stats);
            let e = mult_energy(&a).unwrap();
            let m_sum: u64 = groups.iter().map(|g| g.energy).sum();
            let l_sum: u64 = groups.iter().map(|g| g.line_count).sum();
            assert_eq!(m_sum, e);
            assert_eq!(l_sum, stats.slope_count() as u64);
            assert!(groups.len() as u64 <= pigeonhole_divisor(n));
            for g in &groups {
                assert!(g.n_hi <= 2 * n);
                assert!(g.line_count * g.n_hi <= 2 * n * n);
                for &s in &g.slopes {
                    let c = stats.count(s);
                    assert!(g.n_lo <= c && c < g.n_hi);
                }
            }
        }
    }

    #[test]
    fn popular_group_guarantee() {
        let mut rng = SplitMix64::new(59);
        for _ in 0..60 {
            let n = 3 + rng.next_below(15);
            let members = random_nonzero_set(&mut rng, 101, n);
            let a = set(101, &members);
            let stats = line_statistics(&a).unwrap();
            let groups = dyadic_decompose(&stats);
            let best = select_popular_group(&groups).unwrap();
            let e = mult_energy(&a).unwrap();
            assert!(best.energy * pigeonhole_divisor(n) >= e);
        }
        assert!(select_popular_group(&[]).is_none());
    }

    #[test]
    fn popular_group_tie_prefers_smaller_j() {
        // Two classes with equal energy: j=1 (four lines of 1) and j=2 (one
        // line of 2): energies 4 vs 4.
        let stats = LineIncidence {
            prime: Prime::new(31).unwrap(),
            fibers: {
                let mut m = BTreeMap::new();
                m.insert(2u64, set(31, &[1, 2]));
                m.insert(3u64, set(31, &[4]));
                m.insert(5u64, set(31, &[1]));
                m.insert(7u64, set(31, &[2]));
                m.insert(11u64, set(31, &[5]));
                m
            },
            total_points: 6,
        };
        let groups = dyadic_decompose(&stats);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].energy, 4);
        assert_eq!(groups[1].energy, 4);
        assert_eq!(select_popular_group(&groups).unwrap().j, 1);
    }

    #[test]
    fn symmetry_of_slopes_under_inversion() {
        let mut rng = SplitMix64::new(71);
        let pr = Prime::new(101).unwrap();
        for _ in 0..30 {
            let n = 3 + rng.next_below(10);
            let members = random_nonzero_set(&mut rng, 101, n);
            let a = set(101, &members);
            let stats = line_statistics(&a).unwrap();
            for s in stats.slopes() {
                let inv = pr.inv(s).unwrap();
                assert_eq!(stats.count(s), stats.count(inv));
            }
        }
    }

    #[test]
    fn fibers_reconstruct_the_point_set() {
        let a = set(7, &[1, 2, 4]);
        let stats = line_statistics(&a).unwrap();
        let points = PointSet::from_slopes(&stats, stats.slopes().collect::<Vec<_>>());
        let f = fibers(&points);
        assert_eq!(f.by_abscissa[&1].to_vec(), vec![1, 2, 4]);
        let sum_x: usize = f.by_abscissa.values().map(|s| s.cardinality()).sum();
        let sum_y: usize = f.by_ordinate.values().map(|s| s.cardinality()).sum();
        assert_eq!(sum_x as u64, points.total_points());
        assert_eq!(sum_y as u64, points.total_points());

        // Round trip: every (x, y) implied by the fibers is a point and the
        // totals already match, so the reconstruction is exact.
        for (&x, ys) in &f.by_abscissa {
            for y in ys.iter() {
                assert!(points.contains_point(x, y));
            }
        }

        // Singleton point set.
        let single = line_statistics(&set(7, &[3])).unwrap();
        let sp = PointSet::from_slopes(&single, single.slopes().collect::<Vec<_>>());
        let sf = fibers(&sp);
        assert_eq!(sp.total_points(), 1);
        assert_eq!(sf.by_abscissa.len(), 1);
        assert_eq!(sf.by_ordinate.len(), 1);
    }

    #[test]
    fn popular_lines_worked_examples() {
        let a = set(7, &[1, 2, 4]);
        let (slopes, points) = popular_lines_mode(&a, &rat_u(1)).unwrap();
        assert_eq!(slopes, vec![1, 2, 4]);
        assert_eq!(points.total_points(), 9);

        // Threshold far below 1 point per line keeps every slope.
        let (all, _) = popular_lines_mode(&a, &rat_u(1000)).unwrap();
        assert_eq!(all.len(), 3);

        let b = set(7, &[1, 2]);
        let (slopes, points) = popular_lines_mode(&b, &rat_u(1)).unwrap();
        assert_eq!(slopes, vec![1]);
        assert_eq!(points.total_points(), 2);

        assert!(popular_lines_mode(&a, &rat_frac(1, 2)).is_err());
    }
}
