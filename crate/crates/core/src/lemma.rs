//! Constructive set-refinement routines.
//!
//! Three families of operations live here:
//!
//! * greedy translate covers ([`greedy_cover`]): cover most of one set by few
//!   translates of another, with the achieved translate-count ratio recorded;
//! * iterated minimal-ratio subset refinement ([`pr_refine`],
//!   [`quadruple_refine`]): select a large subset of `Y` whose iterated sumset
//!   with `X_1, ..., X_k` stays controlled, and record the achieved constant;
//! * the popular-pair focus selection ([`focus_lemma`]): prune a point set to
//!   popular rows, columns, and lines, pick the pair of fibers maximizing the
//!   total slope-fiber overlap, and return the per-ordinate intersection sets
//!   with all achieved constants;
//! * the dilated-sum solution count [`e_r_count`] used by the pivot case
//!   analysis.
//!
//! Everything is deterministic: all scans run in ascending element order and
//! all ties break toward the smaller element.

use crate::energy::{fibers, DyadicGroup, PointSet};
use crate::fp::ElementSet;
use crate::rat::{ceil_u64, format_rat, rat_pow, rat_u, Rat};
use crate::{Error, Result};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Outcome of a greedy translate cover.
#[derive(Debug, Clone)]
pub struct CoverResult {
    /// Chosen shifts, in selection order.
    pub translates: Vec<u64>,
    /// Number of elements of `X1` covered by the union of translates.
    pub covered: u64,
    /// `covered / |X1|`, always at least `1 - eps`.
    pub covered_fraction: Rat,
    /// `#translates * |X2| / min(|X1+X2|, |X1-X2|)`: the achieved constant.
    pub bound_ratio: Rat,
}

/// Greedily cover at least `(1 - eps) |X1|` elements of `X1` by translates
/// of `X2`. Each round picks the shift covering the most uncovered elements;
/// ties go to the smallest shift.
pub fn greedy_cover(x1: &ElementSet, x2: &ElementSet, eps: &Rat) -> Result<CoverResult> {
    if x1.is_empty() || x2.is_empty() {
        return Err(Error::EmptySet);
    }
    if x1.prime() != x2.prime() {
        return Err(Error::PrimeMismatch {
            left: x1.prime().value(),
            right: x2.prime().value(),
        });
    }
    if eps < &Rat::zero() || eps >= &Rat::one() {
        return Err(Error::Invalid(format!(
            "cover epsilon must lie in [0, 1), got {}",
            format_rat(eps)
        )));
    }
    let p = x1.prime();
    let pv = p.value() as usize;
    let n1 = x1.cardinality() as u64;
    let target = ceil_u64(&((Rat::one() - eps) * rat_u(n1)));

    let mut remaining = x1.clone();
    let mut covered = 0u64;
    let mut translates = Vec::new();
    let mut counts = vec![0u32; pv];
    while covered < target {
        // counts[t] = |remaining ∩ (X2 + t)|.
        counts.iter_mut().for_each(|c| *c = 0);
        for r in remaining.iter() {
            for b in x2.iter() {
                counts[p.sub(r, b) as usize] += 1;
            }
        }
        let mut best_t = 0u64;
        let mut best_count = 0u32;
        for (t, &c) in counts.iter().enumerate() {
            if c > best_count {
                best_count = c;
                best_t = t as u64;
            }
        }
        debug_assert!(best_count > 0, "remaining elements always admit a cover");
        translates.push(best_t);
        for b in x2.iter() {
            if remaining.remove(p.add(b, best_t)) {
                covered += 1;
            }
        }
    }

    let plus = x1.sumset(x2)?.cardinality() as u64;
    let minus = x1.difference_set(x2)?.cardinality() as u64;
    let bound_ratio =
        rat_u(translates.len() as u64) * rat_u(x2.cardinality() as u64) / rat_u(plus.min(minus));
    Ok(CoverResult {
        translates,
        covered,
        covered_fraction: rat_u(covered) / rat_u(n1),
        bound_ratio,
    })
}

/// The union of `X2 + t` over the chosen translates, for soundness checks
/// and for pulling covered subsets back.
pub fn cover_union(x2: &ElementSet, translates: &[u64]) -> Result<ElementSet> {
    let mut union = ElementSet::empty(x2.prime());
    for &t in translates {
        for b in x2.iter() {
            union.insert(x2.prime().add(b, t));
        }
    }
    Ok(union)
}

/// Outcome of the iterated minimal-ratio refinement.
#[derive(Debug, Clone)]
pub struct PrResult {
    pub y_prime: ElementSet,
    /// `|Y' + X_1 + ... + X_k|`.
    pub sum_size: u64,
    /// `|Y' + X_1 + ... + X_k| * |Y|^(k-1) / prod |Y + X_i|`.
    pub constant: Rat,
}

/// One greedy element-removal descent: starting from `z = start`, repeatedly
/// remove the element whose removal most decreases `|Z + S| / |Z|`, stopping
/// at a local minimum. Ties break toward the smaller element.
fn minimal_ratio_descent(start: &ElementSet, s: &ElementSet) -> ElementSet {
    let p = start.prime();
    let pv = p.value() as usize;
    let mut z = start.clone();
    let mut counts = vec![0u32; pv];
    loop {
        if z.cardinality() <= 1 {
            return z;
        }
        counts.iter_mut().for_each(|c| *c = 0);
        let mut sum_size = 0u64;
        for zz in z.iter() {
            for sv in s.iter() {
                let v = p.add(zz, sv) as usize;
                if counts[v] == 0 {
                    sum_size += 1;
                }
                counts[v] += 1;
            }
        }
        let cur = rat_u(sum_size) / rat_u(z.cardinality() as u64);
        let mut best: Option<(Rat, u64)> = None;
        for e in z.iter() {
            // Points reached only through e disappear with it.
            let loss: u64 = s.iter().filter(|&sv| counts[p.add(e, sv) as usize] == 1).count() as u64;
            let cand = rat_u(sum_size - loss) / rat_u(z.cardinality() as u64 - 1);
            match &best {
                None => best = Some((cand, e)),
                Some((b, _)) if cand < *b => best = Some((cand, e)),
                _ => {}
            }
        }
        let (best_ratio, best_e) = best.expect("z has at least two elements");
        if best_ratio < cur {
            z.remove(best_e);
        } else {
            return z;
        }
    }
}

/// Select `Y' <= Y` with `|Y'| >= (1 - eps) |Y|` by accumulating
/// minimal-ratio pieces: repeatedly run a greedy descent on the remaining
/// elements against `S = X_1 + ... + X_k` and collect the result until the
/// size floor is met. Records the achieved constant.
pub fn pr_refine(y: &ElementSet, xs: &[&ElementSet], eps: &Rat) -> Result<PrResult> {
    if xs.is_empty() {
        return Err(Error::Invalid("need at least one summand set".to_string()));
    }
    if y.is_empty() || xs.iter().any(|x| x.is_empty()) {
        return Err(Error::EmptySet);
    }
    for x in xs {
        if x.prime() != y.prime() {
            return Err(Error::PrimeMismatch {
                left: y.prime().value(),
                right: x.prime().value(),
            });
        }
    }
    if eps <= &Rat::zero() || eps >= &Rat::one() {
        return Err(Error::Invalid(format!(
            "refinement epsilon must lie in (0, 1), got {}",
            format_rat(eps)
        )));
    }

    let floor = ceil_u64(&((Rat::one() - eps) * rat_u(y.cardinality() as u64)));
    let mut s = xs[0].clone();
    for x in &xs[1..] {
        s = s.sumset(x)?;
    }

    let mut acc = ElementSet::empty(y.prime());
    let mut rem = y.clone();
    while (acc.cardinality() as u64) < floor {
        let z = minimal_ratio_descent(&rem, &s);
        debug_assert!(!z.is_empty());
        for e in z.iter() {
            acc.insert(e);
        }
        rem = rem.minus(&z)?;
    }

    let sum_size = acc.sumset(&s)?.cardinality() as u64;
    let mut denom = Rat::one();
    for x in xs {
        denom *= rat_u(y.sumset(x)?.cardinality() as u64);
    }
    let k = xs.len() as u32;
    let constant = rat_u(sum_size) * rat_pow(&rat_u(y.cardinality() as u64), k - 1) / denom;
    Ok(PrResult { y_prime: acc, sum_size, constant })
}

/// Outcome of the four-fold refinement.
#[derive(Debug, Clone)]
pub struct QuadrupleRefineResult {
    pub a_prime: ElementSet,
    /// `|A' + A + A + A|`.
    pub four_fold_size: u64,
    /// `|A' + A + A + A| / (K^3 |A|)`.
    pub constant: Rat,
}

/// Refine `A` so that its four-fold sumset is controlled: returns
/// `A' <= A` with `|A'| >= 0.9 |A|` and records
/// `|A' + A + A + A| / (K^3 |A|)`. Requires `|A + A| <= K |A|`.
pub fn quadruple_refine(a: &ElementSet, k_bound: &Rat) -> Result<QuadrupleRefineResult> {
    let doubling = rat_u(a.sumset(a)?.cardinality() as u64) / rat_u(a.cardinality() as u64);
    if &doubling > k_bound {
        return Err(Error::Invalid(format!(
            "doubling ratio {} exceeds the supplied bound {}",
            format_rat(&doubling),
            format_rat(k_bound)
        )));
    }
    let eps = crate::rat::rat_frac(1, 10);
    let pr = pr_refine(a, &[a, a, a], &eps)?;
    let constant =
        rat_u(pr.sum_size) / (rat_pow(k_bound, 3) * rat_u(a.cardinality() as u64));
    Ok(QuadrupleRefineResult {
        a_prime: pr.y_prime,
        four_fold_size: pr.sum_size,
        constant,
    })
}

/// Configuration for the focus selection: the positive proportions deciding
/// what counts as a popular row/column, when a line survives pruning, and
/// how large an intersection must be to enter the selected ordinate set.
#[derive(Debug, Clone)]
pub struct FocusConfig {
    pub row_popularity: Rat,
    pub col_popularity: Rat,
    pub line_survival: Rat,
    pub intersection_floor: Rat,
    pub max_rounds: u32,
}

impl Default for FocusConfig {
    fn default() -> Self {
        FocusConfig {
            row_popularity: crate::rat::rat_frac(1, 2),
            col_popularity: crate::rat::rat_frac(1, 2),
            line_survival: crate::rat::rat_frac(1, 4),
            intersection_floor: crate::rat::rat_frac(1, 2),
            max_rounds: 10,
        }
    }
}

/// Output of the focus selection.
///
/// `x_tilde` and `y_tilde` are the selected popular abscissa and ordinate;
/// `b_tilde` is the subset of the ordinates above `x_tilde` whose slope
/// fibers meet the ordinate fiber of `y_tilde` in at least the configured
/// floor; `intersections[z]` is that intersection set. The achieved
/// constants are measured against `L`, `M`, the exact mean population
/// `N = |P| / L`, and `|A|`:
///
/// * `c1 = |b_tilde| |A|^3 / (L M)`
/// * `c2 = min_z |intersections[z]| |A|^4 / (L M N)`
/// * `c3 = min(|A_x|, |A_y|) |A| / (L N)`
#[derive(Debug, Clone)]
pub struct FocusResult {
    pub x_tilde: u64,
    pub y_tilde: u64,
    pub b_tilde: ElementSet,
    pub intersections: BTreeMap<u64, ElementSet>,
    pub c1: Rat,
    pub c2: Rat,
    pub c3: Rat,
    /// Total overlap sum over all popular pairs.
    pub sigma: u64,
    /// `sigma * |A| / (L M N)`.
    pub sigma_constant: Rat,
    /// The selected pair's share of the overlap sum, over every ordinate
    /// above `x_tilde` (including those below the intersection floor).
    pub pair_overlap: u64,
    /// `|A_x|` for the selected abscissa, with respect to the full point set.
    pub abscissa_fiber_size: u64,
    /// The ordinate fiber of `y_tilde` (the set `C` of the case analysis).
    pub ordinate_fiber: ElementSet,
    /// Pruning rounds actually run.
    pub prune_rounds: u32,
}

impl FocusResult {
    pub fn ordinate_fiber_size(&self) -> u64 {
        self.ordinate_fiber.cardinality() as u64
    }

    /// Transport the whole result along a dilation of the underlying set.
    pub fn dilate(&self, r: u64) -> Result<FocusResult> {
        let p = self.b_tilde.prime();
        let mut intersections = BTreeMap::new();
        for (&y, set) in &self.intersections {
            intersections.insert(p.mul(y, r), set.dilate(r)?);
        }
        Ok(FocusResult {
            x_tilde: p.mul(self.x_tilde, r),
            y_tilde: p.mul(self.y_tilde, r),
            b_tilde: self.b_tilde.dilate(r)?,
            intersections,
            ordinate_fiber: self.ordinate_fiber.dilate(r)?,
            ..self.clone()
        })
    }
}

struct PruneState {
    fibers: BTreeMap<u64, ElementSet>,
    total: u64,
}

/// Pruned rows/columns/lines of a point set with fixed popularity floors.
/// Runs at most `max_rounds` passes and accepts whatever survives; a pass
/// that would empty the set is rolled back.
fn prune_points(
    points: &PointSet,
    a_size: u64,
    cfg: &FocusConfig,
    n_mean: &Rat,
) -> (PruneState, u32) {
    let p = points.prime();
    let total0 = rat_u(points.total_points());
    let row_floor = &cfg.row_popularity * &total0 / rat_u(a_size);
    let col_floor = &cfg.col_popularity * &total0 / rat_u(a_size);
    let line_floor = &cfg.line_survival * n_mean;

    let mut state = PruneState {
        fibers: points.slope_fibers().clone(),
        total: points.total_points(),
    };
    let mut rounds = 0u32;
    for _ in 0..cfg.max_rounds {
        let mut changed = false;

        // Popular ordinates.
        let mut row_mass: BTreeMap<u64, u64> = BTreeMap::new();
        for (&s, f) in &state.fibers {
            for x in f.iter() {
                *row_mass.entry(p.mul(s, x)).or_insert(0) += 1;
            }
        }
        let keep_row: BTreeMap<u64, bool> = row_mass
            .iter()
            .map(|(&y, &m)| (y, rat_u(m) >= row_floor))
            .collect();
        let mut next: BTreeMap<u64, ElementSet> = BTreeMap::new();
        let mut next_total = 0u64;
        for (&s, f) in &state.fibers {
            let mut nf = ElementSet::empty(p);
            for x in f.iter() {
                if keep_row[&p.mul(s, x)] {
                    nf.insert(x);
                }
            }
            if !nf.is_empty() {
                next_total += nf.cardinality() as u64;
                next.insert(s, nf);
            }
        }
        if next_total == 0 {
            break;
        }
        if next_total != state.total {
            changed = true;
        }
        state = PruneState { fibers: next, total: next_total };

        // Popular abscissae.
        let mut col_mass: BTreeMap<u64, u64> = BTreeMap::new();
        for f in state.fibers.values() {
            for x in f.iter() {
                *col_mass.entry(x).or_insert(0) += 1;
            }
        }
        let keep_col: BTreeMap<u64, bool> = col_mass
            .iter()
            .map(|(&x, &m)| (x, rat_u(m) >= col_floor))
            .collect();
        let mut next: BTreeMap<u64, ElementSet> = BTreeMap::new();
        let mut next_total = 0u64;
        for (&s, f) in &state.fibers {
            let mut nf = ElementSet::empty(p);
            for x in f.iter() {
                if keep_col[&x] {
                    nf.insert(x);
                }
            }
            if !nf.is_empty() {
                next_total += nf.cardinality() as u64;
                next.insert(s, nf);
            }
        }
        if next_total == 0 {
            break;
        }
        if next_total != state.total {
            changed = true;
        }
        state = PruneState { fibers: next, total: next_total };

        // Drop lines that went poor.
        let mut next: BTreeMap<u64, ElementSet> = BTreeMap::new();
        let mut next_total = 0u64;
        for (&s, f) in &state.fibers {
            if rat_u(f.cardinality() as u64) >= line_floor {
                next_total += f.cardinality() as u64;
                next.insert(s, f.clone());
            }
        }
        if next_total == 0 {
            break;
        }
        if next_total != state.total {
            changed = true;
        }
        state = PruneState { fibers: next, total: next_total };

        rounds += 1;
        if !changed {
            break;
        }
    }
    (state, rounds)
}

/// The focus selection over a dyadic class.
///
/// Prunes the class's point set to popular rows and columns and surviving
/// lines, evaluates the overlap sum
/// `sum over (x, y) of sum over z above x of |A_{z/x} ∩ A_y|`
/// over the surviving pairs, takes the argmax pair `(x~, y~)`, and keeps the
/// ordinates `z` above `x~` whose intersection with the fiber of `y~` meets
/// the configured floor. Fibers and intersections are always taken with
/// respect to the full class point set; pruning only restricts which pairs
/// are candidates.
///
/// Fails with a diagnostic when every candidate falls below the floor; that
/// signals the popularity constants are too high for the instance.
pub fn focus_lemma(
    group: &DyadicGroup,
    points: &PointSet,
    a_size: u64,
    cfg: &FocusConfig,
) -> Result<FocusResult> {
    if points.total_points() == 0 {
        return Err(Error::EmptySet);
    }
    debug_assert_eq!(group.point_total, points.total_points());
    let p = points.prime();
    let n_mean = group.mean_population();
    let full = fibers(points);

    let (pruned, prune_rounds) = prune_points(points, a_size, cfg, &n_mean);

    // Surviving abscissae and ordinates, ascending.
    let mut popular_abscissae = ElementSet::empty(p);
    let mut popular_ordinates = ElementSet::empty(p);
    for (&s, f) in &pruned.fibers {
        for x in f.iter() {
            popular_abscissae.insert(x);
            popular_ordinates.insert(p.mul(s, x));
        }
    }

    // Overlap sum and argmax pair. Fibers are w.r.t. the full point set.
    let mut sigma = 0u64;
    let mut best: Option<(u64, u64, u64)> = None; // (inner, x, y)
    for x in popular_abscissae.iter() {
        let above_x = &full.by_abscissa[&x];
        for y in popular_ordinates.iter() {
            let row_y = &full.by_ordinate[&y];
            let mut inner = 0u64;
            for z in above_x.iter() {
                let slope = p.div(z, x).expect("abscissae are nonzero");
                let fiber = points.abscissa_fiber(slope).expect("slope is attained");
                inner += fiber.intersection_size(row_y) as u64;
            }
            sigma += inner;
            match best {
                None => best = Some((inner, x, y)),
                Some((b, _, _)) if inner > b => best = Some((inner, x, y)),
                _ => {}
            }
        }
    }
    let (pair_overlap, x_tilde, y_tilde) = best.expect("point set is nonempty");

    let m = rat_u(group.energy);
    let total = rat_u(points.total_points());
    let a4 = rat_pow(&rat_u(a_size), 4);
    // floor for |A_{z/x~} ∩ A_y~|: intersection_floor * L * M * N / |A|^4,
    // with L * N = |P| exactly.
    let floor_b = &cfg.intersection_floor * &m * &total / &a4;

    let above = &full.by_abscissa[&x_tilde];
    let row = &full.by_ordinate[&y_tilde];
    let mut b_tilde = ElementSet::empty(p);
    let mut intersections = BTreeMap::new();
    let mut min_inter: Option<u64> = None;
    let mut best_inter = 0u64;
    for z in above.iter() {
        let slope = p.div(z, x_tilde).expect("abscissae are nonzero");
        let fiber = points.abscissa_fiber(slope).expect("slope is attained");
        let inter = fiber.intersection(row)?;
        let size = inter.cardinality() as u64;
        best_inter = best_inter.max(size);
        if rat_u(size) >= floor_b {
            b_tilde.insert(z);
            min_inter = Some(min_inter.map_or(size, |m: u64| m.min(size)));
            intersections.insert(z, inter);
        }
    }
    if b_tilde.is_empty() {
        return Err(Error::Degenerate(format!(
            "no ordinate above {} meets the intersection floor {} (best intersection {}); \
             lower the popularity constants for this instance",
            x_tilde,
            format_rat(&floor_b),
            best_inter
        )));
    }
    let min_inter = min_inter.expect("b_tilde is nonempty");

    let l = rat_u(group.line_count);
    let a1 = rat_u(a_size);
    let c1 = rat_u(b_tilde.cardinality() as u64) * rat_pow(&a1, 3) / (&l * &m);
    let c2 = rat_u(min_inter) * &a4 / (&m * &total);
    let row_size = row.cardinality() as u64;
    let col_size = above.cardinality() as u64;
    let c3 = rat_u(col_size.min(row_size)) * &a1 / &total;
    let sigma_constant = rat_u(sigma) * &a1 / (&m * &total);

    Ok(FocusResult {
        x_tilde,
        y_tilde,
        b_tilde,
        intersections,
        c1,
        c2,
        c3,
        sigma,
        sigma_constant,
        pair_overlap,
        abscissa_fiber_size: col_size,
        ordinate_fiber: row.clone(),
        prune_rounds,
    })
}

/// Exact number of ordered quadruples `(a1, a2, a3, a4)` in `C^4` with
/// `a1 + r a2 = a3 + r a4`. Always at least `|C|^2` (the diagonal
/// `a1 = a3, a2 = a4`).
pub fn e_r_count(c: &ElementSet, r: u64) -> Result<u64> {
    if r == 0 {
        return Err(Error::ZeroDilation);
    }
    let p = c.prime();
    if r >= p.value() {
        return Err(Error::OutOfRange { value: r, prime: p.value() });
    }
    let mut counts = vec![0u32; p.value() as usize];
    for a in c.iter() {
        for b in c.iter() {
            counts[p.add(a, p.mul(r, b)) as usize] += 1;
        }
    }
    Ok(counts.iter().map(|&c| (c as u64) * (c as u64)).sum())
}
