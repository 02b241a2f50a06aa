//! Case-dispatched execution of the whole inequality chain on one concrete
//! set, with every displayed inequality recorded as an exact ledger entry.
//!
//! A trace takes a set `A` in `F_p*` with `|A|^2 < p`, normalizes it by a
//! canonical dilation (so dilates of the same set produce identical ledgers),
//! refines it so the four-fold sumset is controlled, selects a popular dyadic
//! slope class, runs the focus selection, rescales so the popular abscissa is
//! `1`, and then dispatches on the ratio-of-differences sets `R(B~, B~)` and
//! `R(C, C)`:
//!
//! * case i.1 — a ratio in `R(B~, B~)` missing from `R(C, C)` pivots `C`;
//! * case i.2 — the symmetric situation pivots `B~` through slope ratios;
//! * case ii  — equal ratio sets, large: an averaged pivot minimizes the
//!   dilated-sum solution count over `C`;
//! * case iii — equal ratio sets, small: a ratio with `r + 1` outside the
//!   set pivots `C` against the slope-fiber intersection set.
//!
//! Every ledger value is an exact integer or rational; the chain's
//! asymptotic claims are never asserted, only their achieved constants are
//! recorded. The ledger always ends with the `fin2`-labeled headline record
//! `M^4` against `K^7 |A|^11`.

use crate::energy::{
    dyadic_decompose, line_statistics, mult_energy, pigeonhole_divisor, select_popular_group,
    DyadicGroup, PointSet,
};
use crate::fp::{ratio_of_differences, ElementSet, Prime};
use crate::lemma::{
    cover_union, e_r_count, focus_lemma, greedy_cover, pr_refine, quadruple_refine, FocusConfig,
    FocusResult,
};
use crate::rat::{format_rat, parse_rat, rat_frac, rat_pow, rat_u, rat_u128, Rat};
use crate::{Error, Result};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Tunable thresholds of the pipeline. The chain survives any fixed positive
/// choices; these are recorded in every report so traces are reproducible.
#[derive(Debug, Clone)]
pub struct TraceConfig {
    /// Case ii applies when `tau * |R| >= min(|C|^2, p)`.
    pub tau: Rat,
    /// Coverage slack for the translate covers inside the case chains.
    pub cover_eps: Rat,
    /// Slack for the four-fold refinement of the input.
    pub pr_eps: Rat,
    /// Slack for the inner refinement of case iii.
    pub pr_eps_inner: Rat,
    /// Minimum proportion of a pivot set that must survive cover pullback.
    pub proportion_floor: Rat,
    pub focus: FocusConfig,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            tau: rat_u(4),
            cover_eps: rat_frac(1, 100),
            pr_eps: rat_frac(1, 10),
            pr_eps_inner: rat_frac(1, 100),
            proportion_floor: rat_frac(1, 2),
            focus: FocusConfig::default(),
        }
    }
}

/// Orientation of a recorded inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Le,
    Ge,
    Eq,
}

impl Direction {
    fn as_str(&self) -> &'static str {
        match self {
            Direction::Le => "<=",
            Direction::Ge => ">=",
            Direction::Eq => "==",
        }
    }
}

/// One verified inequality: exact sides, orientation, and the achieved
/// constant `lhs / rhs` (the constant making the oriented claim tight).
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRecord {
    pub label: String,
    pub lhs: Rat,
    pub rhs: Rat,
    pub direction: Direction,
    pub constant: Rat,
}

fn rec(label: &str, lhs: Rat, rhs: Rat, direction: Direction) -> InequalityRecord {
    debug_assert!(rhs > Rat::zero(), "record {label} needs a positive right side");
    let constant = &lhs / &rhs;
    debug_assert!(constant > Rat::zero(), "record {label} has a vanishing constant");
    InequalityRecord { label: label.to_string(), lhs, rhs, direction, constant }
}

/// Which of the four pivot cases a trace took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    I1,
    I2,
    II,
    III,
}

impl CaseKind {
    pub fn label(&self) -> &'static str {
        match self {
            CaseKind::I1 => "i.1",
            CaseKind::I2 => "i.2",
            CaseKind::II => "ii",
            CaseKind::III => "iii",
        }
    }

    fn from_label(s: &str) -> Option<CaseKind> {
        match s {
            "i.1" => Some(CaseKind::I1),
            "i.2" => Some(CaseKind::I2),
            "ii" => Some(CaseKind::II),
            "iii" => Some(CaseKind::III),
            _ => None,
        }
    }
}

/// Dispatch decision. For cases i.1, i.2, and iii the witness ratio is
/// determined by the ratio sets alone and is returned here; the case ii
/// ratio requires minimizing the solution count over `C` and is chosen by
/// the pipeline afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseDecision {
    pub kind: CaseKind,
    pub r: Option<u64>,
}

/// Deterministic case dispatch from the two ratio-of-differences sets.
/// Scans run in ascending element order; the case iii witness is the first
/// `r` (excluding `p - 1`) with `r + 1` outside the set.
pub fn case_dispatch(
    r_b: &ElementSet,
    r_c: &ElementSet,
    c_size: u64,
    tau: &Rat,
) -> Result<CaseDecision> {
    let p = r_b.prime();
    if r_b != r_c {
        if let Some(r) = r_b.iter().find(|&r| !r_c.contains(r)) {
            return Ok(CaseDecision { kind: CaseKind::I1, r: Some(r) });
        }
        let r = r_c
            .iter()
            .find(|&r| !r_b.contains(r))
            .expect("unequal sets differ in at least one direction");
        return Ok(CaseDecision { kind: CaseKind::I2, r: Some(r) });
    }
    let min_val = ((c_size as u128) * (c_size as u128)).min(p.value() as u128);
    if tau * rat_u(r_b.cardinality() as u64) >= rat_u128(min_val) {
        return Ok(CaseDecision { kind: CaseKind::II, r: None });
    }
    let witness = r_b
        .iter()
        .filter(|&r| r != p.value() - 1)
        .find(|&r| !r_b.contains(p.add(r, 1)));
    match witness {
        Some(r) => Ok(CaseDecision { kind: CaseKind::III, r: Some(r) }),
        None => Err(Error::Degenerate(
            "ratio set is closed under increment; it saturates the multiplicative group"
                .to_string(),
        )),
    }
}

/// Complete record of one trace. All rational quantities are rendered in
/// the canonical `n` / `n/d` form so the serialized report is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub prime: u64,
    pub input_set: Vec<u64>,
    pub config: ConfigSummary,
    /// Which dyadic bound stands in for the class's `N` in ledger entries:
    /// `n_lo` for lower-bound records, `n_hi` for upper-bound records.
    pub n_convention: String,
    /// Dilation applied first, normalizing the input to its canonical dilate.
    pub canonical_dilation: u64,
    /// Dilation applied after the focus selection to move the popular
    /// abscissa to 1.
    pub focus_rescale: u64,
    /// The refined, canonicalized, rescaled working set every case operates
    /// on.
    pub working_set: Vec<u64>,
    pub k_plus: String,
    pub k_times: String,
    pub k: String,
    pub energy: u64,
    pub group: GroupSummary,
    /// Dyadic classes skipped before one produced a dispatchable focus.
    pub groups_skipped: u64,
    pub focus: FocusSummary,
    pub case_taken: String,
    pub pivot_r: u64,
    pub witness_quartet: [u64; 4],
    pub quartet_source: String,
    pub pivot_slope: Option<u64>,
    pub b_tilde: Vec<u64>,
    pub c_set: Vec<u64>,
    pub ledger: Vec<LedgerEntry>,
    pub paper_labels: Vec<String>,
    pub final_check: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub tau: String,
    pub cover_eps: String,
    pub pr_eps: String,
    pub pr_eps_inner: String,
    pub proportion_floor: String,
    pub row_popularity: String,
    pub col_popularity: String,
    pub line_survival: String,
    pub intersection_floor: String,
    pub max_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub j: u32,
    pub line_count: u64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub energy: u64,
    pub point_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusSummary {
    pub x_tilde: u64,
    pub y_tilde: u64,
    pub b_tilde_size: u64,
    pub c1: String,
    pub c2: String,
    pub c3: String,
    pub sigma: u64,
    pub sigma_constant: String,
    pub pair_overlap: u64,
    pub abscissa_fiber_size: u64,
    pub ordinate_fiber_size: u64,
    pub prune_rounds: u32,
    pub intersections: Vec<IntersectionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionEntry {
    pub y: u64,
    pub members: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub lhs: String,
    pub rhs: String,
    pub direction: String,
    pub constant: String,
}

impl TraceConfig {
    pub fn to_summary(&self) -> ConfigSummary {
        ConfigSummary {
            tau: format_rat(&self.tau),
            cover_eps: format_rat(&self.cover_eps),
            pr_eps: format_rat(&self.pr_eps),
            pr_eps_inner: format_rat(&self.pr_eps_inner),
            proportion_floor: format_rat(&self.proportion_floor),
            row_popularity: format_rat(&self.focus.row_popularity),
            col_popularity: format_rat(&self.focus.col_popularity),
            line_survival: format_rat(&self.focus.line_survival),
            intersection_floor: format_rat(&self.focus.intersection_floor),
            max_rounds: self.focus.max_rounds,
        }
    }

    pub fn from_summary(summary: &ConfigSummary) -> Result<TraceConfig> {
        let parse = |s: &str| {
            parse_rat(s).ok_or_else(|| Error::Parse { pos: 0, msg: format!("bad rational `{s}`") })
        };
        Ok(TraceConfig {
            tau: parse(&summary.tau)?,
            cover_eps: parse(&summary.cover_eps)?,
            pr_eps: parse(&summary.pr_eps)?,
            pr_eps_inner: parse(&summary.pr_eps_inner)?,
            proportion_floor: parse(&summary.proportion_floor)?,
            focus: FocusConfig {
                row_popularity: parse(&summary.row_popularity)?,
                col_popularity: parse(&summary.col_popularity)?,
                line_survival: parse(&summary.line_survival)?,
                intersection_floor: parse(&summary.intersection_floor)?,
                max_rounds: summary.max_rounds,
            },
        })
    }
}

const N_CONVENTION: &str = "N reported as n_lo in lower-bound records and n_hi in upper-bound records";

/// Canonical dilate of `A`: the lexicographically smallest member vector
/// among all dilates `e^{-1} A` with `e` in `A`. Identical for every dilate
/// of the same set, which makes traces scale-invariant.
fn canonical_form(a: &ElementSet) -> Result<(ElementSet, u64)> {
    let p = a.prime();
    let mut best: Option<(Vec<u64>, u64)> = None;
    for e in a.iter() {
        let lambda = p.inv(e)?;
        let cand = a.dilate(lambda)?.to_vec();
        match &best {
            None => best = Some((cand, lambda)),
            Some((b, _)) if cand < *b => best = Some((cand, lambda)),
            _ => {}
        }
    }
    let (members, lambda) = best.expect("set is nonempty");
    Ok((ElementSet::from_members(p, &members)?, lambda))
}

/// First quadruple `(p, q, s, t)` of members of `set` in lexicographic order
/// with `p != q`, `s != t`, and `(p - q) / (s - t) = r`.
fn first_quartet(set: &ElementSet, r: u64) -> Option<[u64; 4]> {
    let p = set.prime();
    let members = set.to_vec();
    for &a in &members {
        for &b in &members {
            if a == b {
                continue;
            }
            let num = p.sub(a, b);
            for &c in &members {
                for &d in &members {
                    if c == d {
                        continue;
                    }
                    if p.mul(r, p.sub(c, d)) == num {
                        return Some([a, b, c, d]);
                    }
                }
            }
        }
    }
    None
}

struct DilateCover {
    factor: u64,
    union: ElementSet,
    translate_count: u64,
}

/// Cover the dilate `factor * base` to `1 - eps` by translates of
/// `slope * fiber(slope)`, a subset of the working set.
fn cover_dilate(
    base: &ElementSet,
    factor: u64,
    slope: u64,
    points: &PointSet,
    v: &ElementSet,
    eps: &Rat,
) -> Result<DilateCover> {
    let fiber = points
        .abscissa_fiber(slope)
        .ok_or_else(|| Error::Degenerate(format!("{slope} is not a slope of the class")))?;
    let x2 = fiber.dilate(slope)?;
    debug_assert!(x2.is_subset_of(v), "slope-dilated fibers live inside the working set");
    let x1 = base.dilate(factor)?;
    let cover = greedy_cover(&x1, &x2, eps)?;
    let union = cover_union(&x2, &cover.translates)?;
    Ok(DilateCover { factor, union, translate_count: cover.translates.len() as u64 })
}

/// Remove from `base` every element whose listed dilates escape their cover
/// unions.
fn pull_back_covered(base: &ElementSet, covers: &[&DilateCover]) -> ElementSet {
    let p = base.prime();
    let mut out = ElementSet::empty(p);
    'outer: for c in base.iter() {
        for cov in covers {
            if !cov.union.contains(p.mul(cov.factor, c)) {
                continue 'outer;
            }
        }
        out.insert(c);
    }
    out
}

fn sum_chain(sets: &[&ElementSet]) -> Result<ElementSet> {
    let mut acc = sets[0].clone();
    for s in &sets[1..] {
        acc = acc.sumset(s)?;
    }
    Ok(acc)
}

struct Pipeline<'a> {
    prime: Prime,
    cfg: &'a TraceConfig,
    v: ElementSet,
    v_size: u64,
    v4: ElementSet,
    k: Rat,
    group_l: u64,
    group_m: u64,
    n_lo: u64,
    n_hi: u64,
    points: PointSet,
}

impl<'a> Pipeline<'a> {
    fn check_proportion(&self, refined: &ElementSet, base: &ElementSet, what: &str) -> Result<()> {
        if rat_u(refined.cardinality() as u64)
            < &self.cfg.proportion_floor * rat_u(base.cardinality() as u64)
        {
            return Err(Error::Degenerate(format!(
                "cover pullback kept {} of {} elements of {what}, below the proportion floor",
                refined.cardinality(),
                base.cardinality()
            )));
        }
        Ok(())
    }

    /// The shared covering chain of cases i.1, i.2, and ii: pivot `base`
    /// with ratio `r` represented through four class slopes, cover the four
    /// signed dilates, and bound the four-fold signed sumset by translates
    /// of the four-fold working sumset.
    fn four_fold_chain(
        &self,
        base: &ElementSet,
        r: u64,
        slopes: [u64; 4],
        bchain_label: &'static str,
        fin_label: &'static str,
        records: &mut Vec<InequalityRecord>,
    ) -> Result<()> {
        let p = self.prime;
        let [sp, sq, ss, st] = slopes;
        debug_assert_eq!(p.mul(r, p.sub(ss, st)), p.sub(sp, sq), "slopes represent r");
        let signed = [(sp, sp), (sq, p.neg(sq)), (ss, ss), (st, p.neg(st))];
        let mut covers = Vec::new();
        for (slope, factor) in signed {
            covers.push(cover_dilate(base, factor, slope, &self.points, &self.v, &self.cfg.cover_eps)?);
        }
        let refs: Vec<&DilateCover> = covers.iter().collect();
        let refined = pull_back_covered(base, &refs);
        self.check_proportion(&refined, base, "the pivot set")?;

        let base_sq = rat_u(base.cardinality() as u64).pow(2);
        let c_plus_rc = refined.sumset(&refined.dilate(r)?)?;
        // |C' + rC'| equals the (s-t), (p-q) dilate form exactly.
        let dil_form = refined
            .dilate(p.sub(ss, st))?
            .sumset(&refined.dilate(p.sub(sp, sq))?)?;
        assert_eq!(c_plus_rc.cardinality(), dil_form.cardinality());

        let d_p = refined.dilate(sp)?;
        let d_q = refined.dilate(p.neg(sq))?;
        let d_s = refined.dilate(ss)?;
        let d_t = refined.dilate(p.neg(st))?;
        let four_sum = sum_chain(&[&d_p, &d_q, &d_s, &d_t])?;

        records.push(rec(
            bchain_label,
            rat_u(c_plus_rc.cardinality() as u64),
            base_sq.clone(),
            Direction::Ge,
        ));
        assert!(four_sum.cardinality() >= c_plus_rc.cardinality());
        records.push(rec(
            "vot",
            rat_u(four_sum.cardinality() as u64),
            rat_u(c_plus_rc.cardinality() as u64),
            Direction::Ge,
        ));
        let cover_rhs = &self.k * rat_u(self.v_size) / rat_u(self.n_hi);
        for (suffix, cov) in ["p", "q", "s", "t"].iter().zip(&covers) {
            records.push(rec(
                &format!("cov_{suffix}"),
                rat_u(cov.translate_count),
                cover_rhs.clone(),
                Direction::Le,
            ));
        }
        let t_product: u128 = covers.iter().map(|c| c.translate_count as u128).product();
        let union_rhs = rat_u128(t_product) * rat_u(self.v4.cardinality() as u64);
        assert!(rat_u(four_sum.cardinality() as u64) <= union_rhs);
        records.push(rec(
            "cov_union",
            rat_u(four_sum.cardinality() as u64),
            union_rhs,
            Direction::Le,
        ));
        records.push(rec(
            fin_label,
            rat_u(self.n_hi).pow(4) * base_sq,
            rat_pow(&self.k, 7) * rat_u(self.v_size).pow(5),
            Direction::Le,
        ));
        Ok(())
    }
}

struct CaseOutcome {
    kind: CaseKind,
    r: u64,
    quartet: [u64; 4],
    quartet_source: &'static str,
    pivot_slope: Option<u64>,
    records: Vec<InequalityRecord>,
}

/// Run the full pipeline on `A`.
pub fn run_trace(a: &ElementSet, cfg: &TraceConfig) -> Result<TraceReport> {
    let p = a.prime();
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    if a.contains(0) {
        return Err(Error::Hypothesis("the set must avoid zero".to_string()));
    }
    let n = a.cardinality() as u64;
    if (n as u128) * (n as u128) >= p.value() as u128 {
        return Err(Error::Hypothesis(format!(
            "|A|^2 = {} is not smaller than p = {}",
            n * n,
            p.value()
        )));
    }

    let (a0, canonical_dilation) = canonical_form(a)?;

    // Doubling constants of the (canonicalized) input.
    let k_plus = rat_u(a0.sumset(&a0)?.cardinality() as u64) / rat_u(n);
    let k_times = rat_u(a0.product_set(&a0)?.cardinality() as u64) / rat_u(n);
    let k = if k_plus >= k_times { k_plus.clone() } else { k_times.clone() };

    // Four-fold refinement; the refined set is the working set from here on.
    let quad = quadruple_refine(&a0, &k)?;
    let w = quad.a_prime;
    let w_size = w.cardinality() as u64;

    let energy = mult_energy(&w)?;
    let stats = line_statistics(&w)?;
    let groups = dyadic_decompose(&stats);
    debug_assert_eq!(energy, stats.energy_from_counts());
    debug_assert_eq!(
        energy,
        groups.iter().map(|g| g.energy).sum::<u64>(),
        "dyadic classes partition the energy"
    );

    // Deterministic class order: energy descending, then j ascending. The
    // head of the order is exactly the popular-group selection; later
    // entries are fallbacks for classes whose focus degenerates (for
    // example the diagonal slope alone, whose fibers are singletons).
    let mut order: Vec<&DyadicGroup> = groups.iter().collect();
    order.sort_by(|x, y| y.energy.cmp(&x.energy).then(x.j.cmp(&y.j)));
    debug_assert_eq!(order[0].j, select_popular_group(&groups).expect("nonempty").j);

    let mut groups_skipped = 0u64;
    let mut chosen: Option<(&DyadicGroup, PointSet, FocusResult)> = None;
    for g in order {
        let points = PointSet::from_slopes(&stats, g.slopes.iter().copied());
        match focus_lemma(g, &points, w_size, &cfg.focus) {
            Ok(f) if f.b_tilde.cardinality() >= 2 && f.ordinate_fiber.cardinality() >= 2 => {
                chosen = Some((g, points, f));
                break;
            }
            Ok(_) | Err(Error::Degenerate(_)) => groups_skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let (group, points, focus) = chosen.ok_or_else(|| {
        Error::Degenerate(
            "no dyadic class yields a focus with at least two selected ordinates and a \
             two-element ordinate fiber"
                .to_string(),
        )
    })?;

    // Rescale so the popular abscissa is 1.
    let focus_rescale = p.inv(focus.x_tilde)?;
    let v = w.dilate(focus_rescale)?;
    let points = points.dilate(focus_rescale)?;
    let focus = focus.dilate(focus_rescale)?;
    debug_assert_eq!(focus.x_tilde, 1);
    let v_size = v.cardinality() as u64;
    debug_assert_eq!(v_size, w_size);

    let v4 = sum_chain(&[&v, &v, &v, &v])?;

    let b_tilde = focus.b_tilde.clone();
    let c_set = focus.ordinate_fiber.clone();
    // Post-rescale, the ordinates above 1 are slopes of the class.
    for b in b_tilde.iter() {
        debug_assert!(points.abscissa_fiber(b).is_some());
    }

    let l = group.line_count;
    let m = group.energy;
    let (n_lo, n_hi) = (group.n_lo, group.n_hi);
    let total = points.total_points();

    let mut ledger: Vec<InequalityRecord> = Vec::new();
    ledger.push(rec(
        "finepl",
        rat_u(v4.cardinality() as u64),
        rat_pow(&k, 3) * rat_u(v_size),
        Direction::Le,
    ));
    let w_times = rat_u(w.product_set(&w)?.cardinality() as u64);
    let beg_rhs = rat_u(w_size).pow(4) / w_times;
    assert!(rat_u(energy) >= beg_rhs);
    ledger.push(rec("beg", rat_u(energy), beg_rhs, Direction::Ge));
    assert!(m >= n_lo * n_lo * l && m < n_hi * n_hi * l);
    ledger.push(rec("dy_lo", rat_u(m), rat_u(l * n_lo * n_lo), Direction::Ge));
    ledger.push(rec("dy_hi", rat_u(m), rat_u(l * n_hi * n_hi), Direction::Le));
    assert!(total >= l * n_lo && total < l * n_hi);
    ledger.push(rec("ptset_lo", rat_u(total), rat_u(l * n_lo), Direction::Ge));
    ledger.push(rec("ptset_hi", rat_u(total), rat_u(l * n_hi), Direction::Le));
    let lbn_rhs = rat_u(m) / rat_u(w_size).pow(2);
    assert!(rat_u(4 * l) >= lbn_rhs && rat_u(4 * n_lo) >= lbn_rhs);
    ledger.push(rec("lbn_L", rat_u(l), lbn_rhs.clone(), Direction::Ge));
    ledger.push(rec("lbn_N", rat_u(n_lo), lbn_rhs, Direction::Ge));
    let choice = rec(
        "choiceofm",
        rat_u(m),
        rat_u(energy) / rat_u(pigeonhole_divisor(w_size)),
        Direction::Ge,
    );
    if groups_skipped == 0 {
        assert!(choice.constant >= Rat::one());
    }
    ledger.push(choice);
    ledger.push(rec(
        "sbd",
        rat_u(focus.sigma),
        rat_u(l) * rat_u(m) * rat_u(n_lo) / rat_u(w_size),
        Direction::Ge,
    ));
    // The argmax pair carries at least the average share of the overlap sum.
    ledger.push(rec(
        "sbd1",
        rat_u(focus.pair_overlap),
        rat_u(l) * rat_u(m) * rat_u(n_lo) / rat_u(w_size).pow(3),
        Direction::Ge,
    ));
    ledger.push(rec(
        "onebug",
        rat_u(b_tilde.cardinality() as u64),
        rat_u(l) * rat_u(m) / rat_u(w_size).pow(3),
        Direction::Ge,
    ));
    let min_inter = focus
        .intersections
        .values()
        .map(|s| s.cardinality() as u64)
        .min()
        .expect("b_tilde is nonempty");
    ledger.push(rec(
        "cl",
        rat_u(min_inter),
        rat_u(l) * rat_u(m) * rat_u(n_lo) / rat_u(w_size).pow(4),
        Direction::Ge,
    ));

    let r_b = ratio_of_differences(&b_tilde, &b_tilde)?;
    let r_c = ratio_of_differences(&c_set, &c_set)?;
    let decision = case_dispatch(&r_b, &r_c, c_set.cardinality() as u64, &cfg.tau)?;

    let pipeline = Pipeline {
        prime: p,
        cfg,
        v: v.clone(),
        v_size,
        v4,
        k: k.clone(),
        group_l: l,
        group_m: m,
        n_lo,
        n_hi,
        points,
    };

    let outcome = match decision.kind {
        CaseKind::I1 => {
            let r = decision.r.expect("dispatch provides the witness");
            let quartet = first_quartet(&b_tilde, r)
                .expect("the witness ratio is represented in its source set");
            let mut records = Vec::new();
            // Only diagonal solutions over C: the pivot equation pins r.
            let er = e_r_count(&c_set, r)?;
            let c_sq = (c_set.cardinality() as u64).pow(2);
            assert_eq!(er, c_sq);
            records.push(rec("quad1", rat_u(er), rat_u(c_sq), Direction::Eq));
            pipeline.four_fold_chain(&c_set, r, quartet, "bchain1", "fin1", &mut records)?;
            CaseOutcome {
                kind: CaseKind::I1,
                r,
                quartet,
                quartet_source: "b_tilde",
                pivot_slope: None,
                records,
            }
        }
        CaseKind::I2 => {
            let r = decision.r.expect("dispatch provides the witness");
            let quartet = first_quartet(&c_set, r)
                .expect("the witness ratio is represented in its source set");
            // Map the quartet to slopes through the popular ordinate; the
            // point-set symmetry guarantees these are slopes of the class.
            let y = focus.y_tilde;
            let slopes = [
                p.div(quartet[0], y)?,
                p.div(quartet[1], y)?,
                p.div(quartet[2], y)?,
                p.div(quartet[3], y)?,
            ];
            for s in slopes {
                if pipeline.points.abscissa_fiber(s).is_none() {
                    return Err(Error::Degenerate(format!(
                        "mapped slope {s} left the class; the symmetry argument needs the full \
                         slope set"
                    )));
                }
            }
            let mut records = Vec::new();
            let r_from_slopes = p.div(p.sub(slopes[0], slopes[1]), p.sub(slopes[2], slopes[3]))?;
            assert_eq!(r_from_slopes, r);
            records.push(rec("inv", rat_u(r_from_slopes), rat_u(r), Direction::Eq));
            let er = e_r_count(&b_tilde, r)?;
            let b_sq = (b_tilde.cardinality() as u64).pow(2);
            assert_eq!(er, b_sq);
            records.push(rec("quad1", rat_u(er), rat_u(b_sq), Direction::Eq));
            pipeline.four_fold_chain(&b_tilde, r, slopes, "bchain1", "fin11", &mut records)?;
            CaseOutcome {
                kind: CaseKind::I2,
                r,
                quartet,
                quartet_source: "c",
                pivot_slope: None,
                records,
            }
        }
        CaseKind::II => {
            // Averaged pivot: minimize the solution count over the shared
            // ratio set, scanning ascending.
            let mut best: Option<(u64, u64)> = None; // (E_r, r)
            let mut total_er: u128 = 0;
            for r in r_b.iter() {
                let er = e_r_count(&c_set, r)?;
                total_er += er as u128;
                match best {
                    None => best = Some((er, r)),
                    Some((b, _)) if er < b => best = Some((er, r)),
                    _ => {}
                }
            }
            let (er_min, r) = best.expect("ratio sets are nonempty");
            let c_card = c_set.cardinality() as u64;
            let c_sq = c_card * c_card;
            // Exact double count: diagonal plus one solution per ordered
            // pair of unequal-entry pairs.
            let nontrivial = ((c_sq - c_card) as u128) * ((c_sq - c_card) as u128);
            assert_eq!(total_er, r_b.cardinality() as u128 * c_sq as u128 + nontrivial);
            let mut records = Vec::new();
            records.push(rec(
                "ph",
                rat_u128(total_er),
                rat_u(r_b.cardinality() as u64) * rat_u(c_sq),
                Direction::Le,
            ));
            // The averaged pivot: the minimizing r keeps its solution count
            // within a bounded multiple of the diagonal.
            records.push(rec("ph_min", rat_u(er_min), rat_u(c_sq), Direction::Le));
            let quartet = first_quartet(&c_set, r)
                .expect("the minimizing ratio is represented in its source set");
            let y = focus.y_tilde;
            let slopes = [
                p.div(quartet[0], y)?,
                p.div(quartet[1], y)?,
                p.div(quartet[2], y)?,
                p.div(quartet[3], y)?,
            ];
            for s in slopes {
                if pipeline.points.abscissa_fiber(s).is_none() {
                    return Err(Error::Degenerate(format!(
                        "mapped slope {s} left the class; the symmetry argument needs the full \
                         slope set"
                    )));
                }
            }
            let r_from_slopes = p.div(p.sub(slopes[0], slopes[1]), p.sub(slopes[2], slopes[3]))?;
            assert_eq!(r_from_slopes, r);
            records.push(rec("inv", rat_u(r_from_slopes), rat_u(r), Direction::Eq));
            pipeline.four_fold_chain(&c_set, r, slopes, "bchain2", "fin1", &mut records)?;
            CaseOutcome {
                kind: CaseKind::II,
                r,
                quartet,
                quartet_source: "c",
                pivot_slope: None,
                records,
            }
        }
        CaseKind::III => {
            let r = decision.r.expect("dispatch provides the witness");
            let r1 = p.add(r, 1);
            debug_assert!(r1 != 0 && !r_b.contains(r1));
            let quartet = first_quartet(&b_tilde, r)
                .expect("the witness ratio is represented in its source set");
            let [qp, qq, qs, qt] = quartet;
            let pivot_slope = qp;
            let c_tilde = focus.intersections[&pivot_slope].clone();
            // r + 1 misses the cross ratio set as well, so the pivot sums
            // below are all distinct.
            if c_tilde.cardinality() >= 2 {
                let cross = ratio_of_differences(&c_set, &c_tilde)?;
                assert!(cross.is_subset_of(&r_b));
                assert!(!cross.contains(r1));
            }
            debug_assert!(c_tilde
                .dilate(pivot_slope)?
                .is_subset_of(&v));

            let covers = [
                cover_dilate(&c_set, qs, qs, &pipeline.points, &v, &cfg.cover_eps)?,
                cover_dilate(&c_set, p.neg(qt), qt, &pipeline.points, &v, &cfg.cover_eps)?,
                cover_dilate(&c_tilde, p.neg(qq), qq, &pipeline.points, &v, &cfg.cover_eps)?,
            ];
            let c_ref = pull_back_covered(&c_set, &[&covers[0], &covers[1]]);
            pipeline.check_proportion(&c_ref, &c_set, "C")?;
            let ct_ref = pull_back_covered(&c_tilde, &[&covers[2]]);
            pipeline.check_proportion(&ct_ref, &c_tilde, "the slope intersection set")?;

            let ct_r = ct_ref.dilate(r)?;
            let inner = pr_refine(&c_ref, &[&ct_ref, &ct_r], &cfg.pr_eps_inner)?;
            let c_dd = inner.y_prime;

            let mut records = Vec::new();
            let pivot_sum = c_dd.sumset(&ct_ref.dilate(r1)?)?;
            assert_eq!(
                pivot_sum.cardinality(),
                c_dd.cardinality() * ct_ref.cardinality(),
                "all pivot sums are distinct"
            );
            let a4 = rat_u(v_size).pow(4);
            records.push(rec(
                "bchain3",
                rat_u(pivot_sum.cardinality() as u64),
                (rat_u(l) * rat_u(n_lo) / rat_u(v_size))
                    * (rat_u(l) * rat_u(m) * rat_u(n_lo) / a4),
                Direction::Ge,
            ));
            assert!(pivot_sum.cardinality() as u64 <= inner.sum_size);
            records.push(rec(
                "nda_mid",
                rat_u(pivot_sum.cardinality() as u64),
                rat_u(inner.sum_size),
                Direction::Le,
            ));
            let c_plus_ct = c_ref.sumset(&ct_ref)?.cardinality() as u64;
            let c_plus_rct = c_ref.sumset(&ct_r)?.cardinality() as u64;
            records.push(rec(
                "nda_pr",
                rat_u(inner.sum_size),
                rat_u(c_plus_ct) * rat_u(c_plus_rct) / rat_u(c_ref.cardinality() as u64),
                Direction::Le,
            ));
            assert!(rat_u(c_plus_ct) <= &k * rat_u(v_size));
            records.push(rec(
                "nda_kbound",
                rat_u(c_plus_ct),
                &k * rat_u(v_size),
                Direction::Le,
            ));
            let dil_form = c_ref
                .dilate(p.sub(qs, qt))?
                .sumset(&ct_ref.dilate(p.sub(qp, qq))?)?;
            assert_eq!(dil_form.cardinality() as u64, c_plus_rct);
            records.push(rec(
                "nda_dil",
                rat_u(c_plus_rct),
                rat_u(dil_form.cardinality() as u64),
                Direction::Eq,
            ));
            let tail = sum_chain(&[
                &c_ref.dilate(qs)?,
                &c_ref.dilate(p.neg(qt))?,
                &ct_ref.dilate(p.neg(qq))?,
                &v,
            ])?;
            assert!(dil_form.cardinality() <= tail.cardinality());
            records.push(rec(
                "nda_pivot",
                rat_u(dil_form.cardinality() as u64),
                rat_u(tail.cardinality() as u64),
                Direction::Le,
            ));
            let cover_rhs = &k * rat_u(v_size) / rat_u(n_hi);
            for (suffix, cov) in ["s", "t", "q"].iter().zip(&covers) {
                records.push(rec(
                    &format!("cov_{suffix}"),
                    rat_u(cov.translate_count),
                    cover_rhs.clone(),
                    Direction::Le,
                ));
            }
            let t_product: u128 = covers.iter().map(|c| c.translate_count as u128).product();
            let union_rhs = rat_u128(t_product) * rat_u(pipeline.v4.cardinality() as u64);
            assert!(rat_u(tail.cardinality() as u64) <= union_rhs);
            records.push(rec(
                "nda_union",
                rat_u(tail.cardinality() as u64),
                union_rhs,
                Direction::Le,
            ));
            let lhs = (rat_u(l) * rat_u(m) * rat_u(n_hi) / rat_u(v_size).pow(4))
                * (rat_u(l) * rat_u(n_hi) / rat_u(v_size)).pow(2)
                * rat_u(n_hi).pow(3);
            records.push(rec(
                "nda",
                lhs,
                rat_pow(&k, 7) * rat_u(v_size).pow(5),
                Direction::Le,
            ));
            CaseOutcome {
                kind: CaseKind::III,
                r,
                quartet,
                quartet_source: "b_tilde",
                pivot_slope: Some(pivot_slope),
                records,
            }
        }
    };

    // Witness sanity: the quadruple reproduces r exactly.
    {
        let [wp, wq, ws, wt] = outcome.quartet;
        assert_eq!(p.mul(outcome.r, p.sub(ws, wt)), p.sub(wp, wq));
    }

    ledger.extend(outcome.records);

    let fin2_lhs = rat_u(m).pow(4);
    let fin2_rhs = rat_pow(&k, 7) * rat_u(v_size).pow(11);
    let final_check = &fin2_lhs / &fin2_rhs;
    let g_div = rat_u(pigeonhole_divisor(v_size));
    let withlog = rec(
        "withlog",
        &final_check * rat_pow(&k, 11) * rat_pow(&g_div, 4),
        rat_u(v_size),
        Direction::Ge,
    );
    if groups_skipped == 0 {
        assert!(withlog.constant >= Rat::one());
    }
    ledger.push(withlog);
    ledger.push(rec("fin2", fin2_lhs, fin2_rhs, Direction::Le));

    let paper_labels: Vec<String> = ledger.iter().map(|r| r.label.clone()).collect();
    let ledger_entries: Vec<LedgerEntry> = ledger
        .iter()
        .map(|r| LedgerEntry {
            label: r.label.clone(),
            lhs: format_rat(&r.lhs),
            rhs: format_rat(&r.rhs),
            direction: r.direction.as_str().to_string(),
            constant: format_rat(&r.constant),
        })
        .collect();

    let intersections: Vec<IntersectionEntry> = focus
        .intersections
        .iter()
        .map(|(&y, set)| IntersectionEntry { y, members: set.to_vec() })
        .collect();

    Ok(TraceReport {
        prime: p.value(),
        input_set: a.to_vec(),
        config: cfg.to_summary(),
        n_convention: N_CONVENTION.to_string(),
        canonical_dilation,
        focus_rescale,
        working_set: v.to_vec(),
        k_plus: format_rat(&k_plus),
        k_times: format_rat(&k_times),
        k: format_rat(&k),
        energy,
        group: GroupSummary {
            j: group.j,
            line_count: pipeline.group_l,
            n_lo: pipeline.n_lo,
            n_hi: pipeline.n_hi,
            energy: pipeline.group_m,
            point_total: total,
        },
        groups_skipped,
        focus: FocusSummary {
            x_tilde: focus.x_tilde,
            y_tilde: focus.y_tilde,
            b_tilde_size: b_tilde.cardinality() as u64,
            c1: format_rat(&focus.c1),
            c2: format_rat(&focus.c2),
            c3: format_rat(&focus.c3),
            sigma: focus.sigma,
            sigma_constant: format_rat(&focus.sigma_constant),
            pair_overlap: focus.pair_overlap,
            abscissa_fiber_size: focus.abscissa_fiber_size,
            ordinate_fiber_size: focus.ordinate_fiber_size(),
            prune_rounds: focus.prune_rounds,
            intersections,
        },
        case_taken: outcome.kind.label().to_string(),
        pivot_r: outcome.r,
        witness_quartet: outcome.quartet,
        quartet_source: outcome.quartet_source.to_string(),
        pivot_slope: outcome.pivot_slope,
        b_tilde: b_tilde.to_vec(),
        c_set: c_set.to_vec(),
        ledger: ledger_entries,
        paper_labels,
        final_check: format_rat(&final_check),
    })
}

/// Serialize a report in its canonical byte form.
pub fn report_to_json(report: &TraceReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Parse a report from its canonical byte form.
pub fn report_from_json(text: &str) -> Result<TraceReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        pos: e.column().saturating_sub(1),
        msg: format!("bad trace report: {e}"),
    })
}

/// A field of a report that failed re-verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub label: String,
    pub detail: String,
}

/// Recompute the whole trace from the report's input and configuration and
/// confirm every stored value. Returns one violation per divergent field or
/// ledger entry; an empty list means the report is verified.
pub fn verify_ledger(report: &TraceReport) -> Vec<Violation> {
    let mut violations = Vec::new();
    let vio = |label: &str, detail: String| Violation { label: label.to_string(), detail };

    let prime = match Prime::new(report.prime) {
        Ok(p) => p,
        Err(e) => return vec![vio("prime", e.to_string())],
    };
    let input = match ElementSet::from_members(prime, &report.input_set) {
        Ok(s) => s,
        Err(e) => return vec![vio("input_set", e.to_string())],
    };
    let cfg = match TraceConfig::from_summary(&report.config) {
        Ok(c) => c,
        Err(e) => return vec![vio("config", e.to_string())],
    };
    let fresh = match run_trace(&input, &cfg) {
        Ok(r) => r,
        Err(e) => return vec![vio("trace", e.to_string())],
    };

    macro_rules! check {
        ($field:ident) => {
            if fresh.$field != report.$field {
                violations.push(vio(
                    stringify!($field),
                    format!("stored {:?}, recomputed {:?}", report.$field, fresh.$field),
                ));
            }
        };
    }
    check!(canonical_dilation);
    check!(focus_rescale);
    check!(working_set);
    check!(k_plus);
    check!(k_times);
    check!(k);
    check!(energy);
    check!(groups_skipped);
    check!(case_taken);
    check!(pivot_r);
    check!(witness_quartet);
    check!(quartet_source);
    check!(pivot_slope);
    check!(b_tilde);
    check!(c_set);
    check!(final_check);
    check!(n_convention);
    if fresh.group != report.group {
        violations.push(vio("group", "dyadic class data diverged".to_string()));
    }
    if fresh.focus != report.focus {
        violations.push(vio("focus", "focus data diverged".to_string()));
    }
    if fresh.paper_labels != report.paper_labels {
        violations.push(vio("paper_labels", "label sequence diverged".to_string()));
    }
    if fresh.ledger.len() != report.ledger.len() {
        violations.push(vio(
            "ledger",
            format!("stored {} entries, recomputed {}", report.ledger.len(), fresh.ledger.len()),
        ));
    } else {
        for (stored, recomputed) in report.ledger.iter().zip(&fresh.ledger) {
            if stored != recomputed {
                violations.push(vio(
                    &stored.label,
                    format!("stored {stored:?}, recomputed {recomputed:?}"),
                ));
            }
        }
    }
    violations
}

/// The case tag of a report, if its label is well formed.
pub fn case_of(report: &TraceReport) -> Option<CaseKind> {
    CaseKind::from_label(&report.case_taken)
}
