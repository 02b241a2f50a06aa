//! sumprod — exact prime-field set statistics, refinement demos, inequality
//! traces, and extremal-set scans.
//!
//! Usage:
//!   sumprod stats  (--set LIT | --gen SPEC) [--format text|csv|json] [--popular-lines K]
//!   sumprod lemma cover --x1 LIT --x2 LIT [--eps R]
//!   sumprod lemma pr --y LIT --x LIT [--x LIT ...] [--eps R]
//!   sumprod lemma focus (--set LIT | --gen SPEC) [popularity flags]
//!   sumprod trace  (--set LIT | --gen SPEC) [threshold flags] [--golden-check FILE]
//!   sumprod scan   --p P --n N (--exhaustive [--budget B] | --samples S --seed X)
//!                  [--minus] [--ratio] [--workers W]
//!   sumprod anneal --p P --n N [--steps S] [--t0 T] [--cooling C] [--restarts R]
//!                  [--seed X] [--minus] [--ratio]
//!   sumprod fit    (--points "n:v,n:v,..." | --input FILE)
//!
//! Common flags: --config FILE (key=value lines; flags override),
//! --format text|csv|json, --out PATH, --workers N.
//!
//! Set literals look like `p=7:{1,2,4}`. Generator specs:
//!   random:p=1009,n=25,seed=7
//!   ap:p=101,first=1,step=3,n=5
//!   gp:p=101,first=1,ratio=2,n=5
//!
//! Exit codes: 0 success, 2 usage or parse failure, 3 hypothesis violation,
//! 4 enumeration budget refusal, 5 verification failure.

use std::collections::BTreeMap;
use std::process::ExitCode;

use sumprod::energy::{
    dyadic_decompose, line_statistics, mult_energy, popular_lines_mode, select_popular_group,
    PointSet,
};
use sumprod::fp::{parse_set_literal, ElementSet, Prime};
use sumprod::lemma::{focus_lemma, greedy_cover, pr_refine, FocusConfig};
use sumprod::rat::{format_rat, parse_rat, Rat};
use sumprod::rng::SplitMix64;
use sumprod::search::{
    anneal_extremal, exhaustive_scan, fit_exponent, random_scan, random_subset, AnnealSchedule,
    MulOp, Objective, ScanRecord, SumOp, CSV_HEADER, DEFAULT_SCAN_BUDGET,
};
use sumprod::trace::{report_to_json, run_trace, verify_ledger, TraceConfig};
use sumprod::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_VERIFY: u8 = 5;

/// A CLI failure: message plus process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::Hypothesis(_) => EXIT_HYPOTHESIS,
            Error::Budget { .. } => EXIT_BUDGET,
            Error::Degenerate(_) => 1,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Flags with values, boolean switches, and positional words.
struct Opts {
    positional: Vec<String>,
    values: BTreeMap<String, Vec<String>>,
    switches: Vec<String>,
}

const SWITCHES: &[&str] = &["exhaustive", "minus", "ratio", "help"];

fn parse_args(args: &[String]) -> CliResult<Opts> {
    let mut opts = Opts { positional: Vec::new(), values: BTreeMap::new(), switches: Vec::new() };
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        if let Some(name) = arg.strip_prefix("--") {
            if let Some((key, value)) = name.split_once('=') {
                opts.values.entry(key.to_string()).or_default().push(value.to_string());
            } else if SWITCHES.contains(&name) {
                opts.switches.push(name.to_string());
            } else {
                i += 1;
                let value = args
                    .get(i)
                    .ok_or_else(|| Failure::usage(format!("flag --{name} needs a value")))?;
                opts.values.entry(name.to_string()).or_default().push(value.clone());
            }
        } else {
            opts.positional.push(arg.clone());
        }
        i += 1;
    }
    // A config file supplies defaults; explicit flags win.
    if let Some(paths) = opts.values.get("config").cloned() {
        for path in paths {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::usage(format!("cannot read config {path}: {e}")))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Failure::usage(format!("{path}:{}: expected key=value", lineno + 1))
                })?;
                let key = key.trim();
                let value = value.trim();
                if SWITCHES.contains(&key) {
                    if value == "true" && !opts.switches.iter().any(|s| s == key) {
                        opts.switches.push(key.to_string());
                    }
                } else if !opts.values.contains_key(key) {
                    opts.values
                        .entry(key.to_string())
                        .or_default()
                        .push(value.to_string());
                }
            }
        }
    }
    Ok(opts)
}

impl Opts {
    fn value(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.last()).map(|s| s.as_str())
    }

    fn values_of(&self, key: &str) -> Vec<&str> {
        self.values.get(key).map_or_else(Vec::new, |v| v.iter().map(|s| s.as_str()).collect())
    }

    fn switch(&self, key: &str) -> bool {
        self.switches.iter().any(|s| s == key)
    }

    fn u64_or(&self, key: &str, default: u64) -> CliResult<u64> {
        match self.value(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Failure::usage(format!("--{key} expects an integer, got `{s}`"))),
        }
    }

    fn required_u64(&self, key: &str) -> CliResult<u64> {
        let s = self
            .value(key)
            .ok_or_else(|| Failure::usage(format!("missing required flag --{key}")))?;
        s.parse()
            .map_err(|_| Failure::usage(format!("--{key} expects an integer, got `{s}`")))
    }

    fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.value(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Failure::usage(format!("--{key} expects a number, got `{s}`"))),
        }
    }

    fn rat_or(&self, key: &str, default: Rat) -> CliResult<Rat> {
        match self.value(key) {
            None => Ok(default),
            Some(s) => parse_rat(s)
                .ok_or_else(|| Failure::usage(format!("--{key} expects a rational, got `{s}`"))),
        }
    }

    fn format(&self, default: &str) -> CliResult<String> {
        let f = self.value("format").unwrap_or(default).to_string();
        if ["text", "csv", "json"].contains(&f.as_str()) {
            Ok(f)
        } else {
            Err(Failure::usage(format!("--format must be text, csv, or json, got `{f}`")))
        }
    }

    fn workers(&self) -> CliResult<usize> {
        Ok(self.u64_or("workers", 1)? as usize)
    }

    fn objective(&self) -> Objective {
        Objective {
            additive: if self.switch("minus") { SumOp::Diff } else { SumOp::Sum },
            multiplicative: if self.switch("ratio") { MulOp::Ratio } else { MulOp::Prod },
        }
    }
}

fn emit(opts: &Opts, content: &str) -> CliResult<()> {
    match opts.value("out") {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure { code: 1, message: format!("cannot write {path}: {e}") }),
    }
}

fn parse_kv_spec(body: &str) -> CliResult<BTreeMap<String, u64>> {
    let mut out = BTreeMap::new();
    for piece in body.split(',') {
        let (k, v) = piece
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("generator expects k=v pairs, got `{piece}`")))?;
        let value: u64 = v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("generator value `{v}` is not an integer")))?;
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

fn generate_set(spec: &str) -> CliResult<ElementSet> {
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| Failure::usage("generator spec looks like `random:p=1009,n=25,seed=7`"))?;
    let kv = parse_kv_spec(body)?;
    let need = |key: &str| {
        kv.get(key)
            .copied()
            .ok_or_else(|| Failure::usage(format!("generator `{kind}` needs `{key}=`")))
    };
    let prime = Prime::new(need("p")?).map_err(Failure::from)?;
    let n = need("n")?;
    if n == 0 || n >= prime.value() {
        return Err(Failure::usage("generator size must satisfy 0 < n < p"));
    }
    match kind {
        "random" => {
            let seed = need("seed")?;
            let mut rng = SplitMix64::stream(seed, 0);
            let mut buf = Vec::new();
            let members = random_subset(prime, n, &mut rng, &mut buf);
            Ok(ElementSet::from_members(prime, &members).map_err(Failure::from)?)
        }
        "ap" => {
            let first = need("first")?;
            let step = need("step")?;
            let mut members = Vec::new();
            let mut cur = first % prime.value();
            for _ in 0..n {
                members.push(cur);
                cur = prime.add(cur, step % prime.value());
            }
            let set = ElementSet::from_members(prime, &members).map_err(Failure::from)?;
            if set.cardinality() as u64 != n {
                return Err(Failure::usage("progression wrapped onto itself; fewer distinct members than requested"));
            }
            Ok(set)
        }
        "gp" => {
            let first = need("first")?;
            let ratio = need("ratio")?;
            if first == 0 || ratio == 0 {
                return Err(Failure::usage("geometric progressions need nonzero first and ratio"));
            }
            let mut members = Vec::new();
            let mut cur = first % prime.value();
            for _ in 0..n {
                members.push(cur);
                cur = prime.mul(cur, ratio % prime.value());
            }
            let set = ElementSet::from_members(prime, &members).map_err(Failure::from)?;
            if set.cardinality() as u64 != n {
                return Err(Failure::usage("progression wrapped onto itself; fewer distinct members than requested"));
            }
            Ok(set)
        }
        other => Err(Failure::usage(format!("unknown generator `{other}`"))),
    }
}

fn load_set(opts: &Opts) -> CliResult<ElementSet> {
    match (opts.value("set"), opts.value("gen")) {
        (Some(lit), None) => Ok(parse_set_literal(lit).map_err(Failure::from)?),
        (None, Some(spec)) => generate_set(spec),
        (None, None) => Err(Failure::usage("need --set or --gen")),
        (Some(_), Some(_)) => Err(Failure::usage("--set and --gen are mutually exclusive")),
    }
}

fn focus_config(opts: &Opts) -> CliResult<FocusConfig> {
    let default = FocusConfig::default();
    Ok(FocusConfig {
        row_popularity: opts.rat_or("row-pop", default.row_popularity)?,
        col_popularity: opts.rat_or("col-pop", default.col_popularity)?,
        line_survival: opts.rat_or("line-survival", default.line_survival)?,
        intersection_floor: opts.rat_or("intersection-floor", default.intersection_floor)?,
        max_rounds: opts.u64_or("max-rounds", default.max_rounds as u64)? as u32,
    })
}

fn trace_config(opts: &Opts) -> CliResult<TraceConfig> {
    let default = TraceConfig::default();
    Ok(TraceConfig {
        tau: opts.rat_or("tau", default.tau)?,
        cover_eps: opts.rat_or("cover-eps", default.cover_eps)?,
        pr_eps: opts.rat_or("pr-eps", default.pr_eps)?,
        pr_eps_inner: opts.rat_or("pr-eps-inner", default.pr_eps_inner)?,
        proportion_floor: opts.rat_or("proportion-floor", default.proportion_floor)?,
        focus: focus_config(opts)?,
    })
}

fn cmd_stats(opts: &Opts) -> CliResult<()> {
    let a = load_set(opts)?;
    if a.contains(0) {
        return Err(Failure::usage("statistics need a subset of the multiplicative group (0 excluded)"));
    }
    if a.is_empty() {
        return Err(Failure::usage("statistics need a nonempty set"));
    }
    let p = a.prime();
    let n = a.cardinality() as u64;
    if (n as u128) * (n as u128) >= p.value() as u128 {
        eprintln!(
            "warning: |A|^2 = {} is not below p = {}; traces would reject this set",
            n * n,
            p.value()
        );
    }
    let sum = a.sumset(&a).map_err(Failure::from)?.cardinality();
    let diff = a.difference_set(&a).map_err(Failure::from)?.cardinality();
    let prod = a.product_set(&a).map_err(Failure::from)?.cardinality();
    let ratio = a.ratio_set(&a).map_err(Failure::from)?.cardinality();
    let energy = mult_energy(&a).map_err(Failure::from)?;
    let stats = line_statistics(&a).map_err(Failure::from)?;
    let groups = dyadic_decompose(&stats);
    let popular_j = select_popular_group(&groups).map(|g| g.j);

    let format = opts.format("text")?;
    match format.as_str() {
        "csv" => {
            let mut out = String::from("slope,count\n");
            for s in stats.slopes() {
                out.push_str(&format!("{},{}\n", s, stats.count(s)));
            }
            emit(opts, &out)
        }
        "json" => {
            let groups_json: Vec<serde_json::Value> = groups
                .iter()
                .map(|g| {
                    serde_json::json!({ "j": g.j, "L": g.line_count, "M": g.energy })
                })
                .collect();
            let doc = serde_json::json!({ "E": energy, "groups": groups_json });
            emit(opts, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
        _ => {
            let mut out = String::new();
            out.push_str(&format!("p = {}, |A| = {}\n", p.value(), n));
            out.push_str(&format!(
                "|A+A| = {sum}  |A-A| = {diff}  |A.A| = {prod}  |A:A| = {ratio}\n"
            ));
            out.push_str(&format!("E = {energy} over {} slopes\n", stats.slope_count()));
            out.push_str("  j    L    [n_lo, n_hi)        M\n");
            for g in &groups {
                let marker = if Some(g.j) == popular_j { " *" } else { "" };
                out.push_str(&format!(
                    "{:>3} {:>4}    [{}, {}) {:>12}{}\n",
                    g.j, g.line_count, g.n_lo, g.n_hi, g.energy, marker
                ));
            }
            if let Some(k) = opts.value("popular-lines") {
                let k = parse_rat(k)
                    .ok_or_else(|| Failure::usage("--popular-lines expects a rational"))?;
                let (slopes, points) = popular_lines_mode(&a, &k).map_err(Failure::from)?;
                out.push_str(&format!(
                    "popular lines at |A|/{}: {} slopes carrying {} points\n",
                    format_rat(&k),
                    slopes.len(),
                    points.total_points()
                ));
            }
            emit(opts, &out)
        }
    }
}

fn cmd_lemma(opts: &Opts) -> CliResult<()> {
    let which = opts
        .positional
        .get(1)
        .ok_or_else(|| Failure::usage("lemma needs a subcommand: cover, pr, or focus"))?;
    match which.as_str() {
        "cover" => {
            let x1 = parse_set_literal(
                opts.value("x1").ok_or_else(|| Failure::usage("missing --x1"))?,
            )
            .map_err(Failure::from)?;
            let x2 = parse_set_literal(
                opts.value("x2").ok_or_else(|| Failure::usage("missing --x2"))?,
            )
            .map_err(Failure::from)?;
            let eps = opts.rat_or("eps", Rat::new(1.into(), 100.into()))?;
            let res = greedy_cover(&x1, &x2, &eps).map_err(Failure::from)?;
            let doc = serde_json::json!({
                "translates": res.translates,
                "covered": res.covered,
                "covered_fraction": format_rat(&res.covered_fraction),
                "bound_ratio": format_rat(&res.bound_ratio),
            });
            emit(opts, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
        "pr" => {
            let y = parse_set_literal(
                opts.value("y").ok_or_else(|| Failure::usage("missing --y"))?,
            )
            .map_err(Failure::from)?;
            let xs: Vec<ElementSet> = opts
                .values_of("x")
                .iter()
                .map(|lit| parse_set_literal(lit).map_err(Failure::from))
                .collect::<CliResult<_>>()?;
            if xs.is_empty() {
                return Err(Failure::usage("need at least one --x"));
            }
            let refs: Vec<&ElementSet> = xs.iter().collect();
            let eps = opts.rat_or("eps", Rat::new(1.into(), 10.into()))?;
            let res = pr_refine(&y, &refs, &eps).map_err(Failure::from)?;
            let doc = serde_json::json!({
                "y_prime": res.y_prime.to_vec(),
                "sum_size": res.sum_size,
                "constant": format_rat(&res.constant),
            });
            emit(opts, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
        "focus" => {
            let a = load_set(opts)?;
            let stats = line_statistics(&a).map_err(Failure::from)?;
            let groups = dyadic_decompose(&stats);
            let group = select_popular_group(&groups)
                .ok_or_else(|| Failure::usage("the set attains no slopes"))?;
            let points = PointSet::from_slopes(&stats, group.slopes.iter().copied());
            let cfg = focus_config(opts)?;
            let res = focus_lemma(group, &points, a.cardinality() as u64, &cfg)
                .map_err(Failure::from)?;
            let intersections: Vec<serde_json::Value> = res
                .intersections
                .iter()
                .map(|(y, s)| serde_json::json!({ "y": y, "members": s.to_vec() }))
                .collect();
            let doc = serde_json::json!({
                "x_tilde": res.x_tilde,
                "y_tilde": res.y_tilde,
                "b_tilde": res.b_tilde.to_vec(),
                "c1": format_rat(&res.c1),
                "c2": format_rat(&res.c2),
                "c3": format_rat(&res.c3),
                "sigma": res.sigma,
                "sigma_constant": format_rat(&res.sigma_constant),
                "intersections": intersections,
            });
            emit(opts, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
        other => Err(Failure::usage(format!("unknown lemma subcommand `{other}`"))),
    }
}

fn cmd_trace(opts: &Opts) -> CliResult<()> {
    let a = load_set(opts)?;
    let cfg = trace_config(opts)?;
    let report = run_trace(&a, &cfg).map_err(Failure::from)?;
    let violations = verify_ledger(&report);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("ledger violation at {}: {}", v.label, v.detail);
        }
        return Err(Failure { code: EXIT_VERIFY, message: "ledger verification failed".into() });
    }
    let text = report_to_json(&report);
    if let Some(golden) = opts.value("golden-check") {
        let stored = std::fs::read_to_string(golden)
            .map_err(|e| Failure::usage(format!("cannot read golden {golden}: {e}")))?;
        if stored != text {
            return Err(Failure {
                code: EXIT_VERIFY,
                message: format!("report differs from golden {golden}"),
            });
        }
    }
    emit(opts, &text)
}

fn records_csv(records: &[ScanRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

fn record_json(record: &ScanRecord) -> serde_json::Value {
    serde_json::json!({
        "p": record.p,
        "n": record.n,
        "set": record.set,
        "s": record.s,
        "m": record.m,
        "objective": record.objective,
        "normalized": record.normalized,
        "seed": record.seed,
    })
}

fn cmd_scan(opts: &Opts) -> CliResult<()> {
    let prime = Prime::new(opts.required_u64("p")?).map_err(Failure::from)?;
    let n = opts.required_u64("n")?;
    let objective = opts.objective();
    let format = opts.format("csv")?;
    if opts.switch("exhaustive") {
        let budget = opts.u64_or("budget", DEFAULT_SCAN_BUDGET as u64)? as u128;
        let (record, histogram) = exhaustive_scan(prime, n, objective, budget).map_err(Failure::from)?;
        match format.as_str() {
            "json" => {
                let hist: BTreeMap<String, u64> =
                    histogram.iter().map(|(k, v)| (k.to_string(), *v)).collect();
                let doc = serde_json::json!({ "minimum": record_json(&record), "histogram": hist });
                emit(opts, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
            }
            _ => emit(opts, &records_csv(std::slice::from_ref(&record))),
        }
    } else {
        let samples = opts.u64_or("samples", 100)?;
        let seed = opts.u64_or("seed", 0)?;
        let records =
            random_scan(prime, n, samples, seed, objective, opts.workers()?).map_err(Failure::from)?;
        match format.as_str() {
            "json" => {
                let rows: Vec<serde_json::Value> = records.iter().map(record_json).collect();
                emit(opts, &format!("{}\n", serde_json::to_string_pretty(&rows).unwrap()))
            }
            _ => emit(opts, &records_csv(&records)),
        }
    }
}

fn cmd_anneal(opts: &Opts) -> CliResult<()> {
    let prime = Prime::new(opts.required_u64("p")?).map_err(Failure::from)?;
    let n = opts.required_u64("n")?;
    let schedule = AnnealSchedule {
        steps: opts.u64_or("steps", AnnealSchedule::default().steps)?,
        t0: opts.value("t0").map(|_| opts.f64_or("t0", 0.0)).transpose()?,
        cooling: opts.f64_or("cooling", AnnealSchedule::default().cooling)?,
        restarts: opts.u64_or("restarts", 1)? as u32,
    };
    let seed = opts.u64_or("seed", 0)?;
    let record =
        anneal_extremal(prime, n, &schedule, seed, opts.objective()).map_err(Failure::from)?;
    match opts.format("csv")?.as_str() {
        "json" => emit(
            opts,
            &format!("{}\n", serde_json::to_string_pretty(&record_json(&record)).unwrap()),
        ),
        _ => emit(opts, &records_csv(std::slice::from_ref(&record))),
    }
}

fn parse_points(spec: &str) -> CliResult<Vec<(u64, u64)>> {
    let mut out = Vec::new();
    for piece in spec.split(',') {
        let (n, v) = piece
            .split_once(':')
            .ok_or_else(|| Failure::usage("--points expects `n:value` pairs"))?;
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("bad size `{n}` in --points")))?;
        let v: u64 = v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("bad value `{v}` in --points")))?;
        out.push((n, v));
    }
    Ok(out)
}

/// Per-size minima from a CSV emitted by `scan`.
fn minima_from_csv(text: &str) -> CliResult<Vec<(u64, u64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        _ => return Err(Failure::usage(format!("input must start with `{CSV_HEADER}`"))),
    }
    let mut minima: BTreeMap<u64, u64> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Failure::usage(format!("line {}: expected 7 columns", lineno + 2)));
        }
        let n: u64 = cols[1]
            .parse()
            .map_err(|_| Failure::usage(format!("line {}: bad n", lineno + 2)))?;
        let obj: u64 = cols[4]
            .parse()
            .map_err(|_| Failure::usage(format!("line {}: bad objective", lineno + 2)))?;
        minima
            .entry(n)
            .and_modify(|cur| *cur = (*cur).min(obj))
            .or_insert(obj);
    }
    Ok(minima.into_iter().collect())
}

fn cmd_fit(opts: &Opts) -> CliResult<()> {
    let minima = match (opts.value("points"), opts.value("input")) {
        (Some(spec), None) => parse_points(spec)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {path}: {e}")))?;
            minima_from_csv(&text)?
        }
        _ => return Err(Failure::usage("need exactly one of --points or --input")),
    };
    let fit = fit_exponent(&minima).map_err(Failure::from)?;
    match opts.format("json")?.as_str() {
        "text" => emit(
            opts,
            &format!(
                "slope = {:.6}\nintercept = {:.6}\nresidual = {:.6}\n",
                fit.slope, fit.intercept, fit.residual
            ),
        ),
        _ => {
            let doc = serde_json::json!({
                "slope": fit.slope,
                "intercept": fit.intercept,
                "residual": fit.residual,
                "points": fit.points,
            });
            emit(opts, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
    }
}

fn usage() -> String {
    "usage: sumprod <stats|lemma|trace|scan|anneal|fit> [flags]\n\
     see the crate README or the header of this binary's source for details\n"
        .to_string()
}

fn dispatch(opts: &Opts) -> CliResult<()> {
    let Some(command) = opts.positional.first() else {
        return Err(Failure::usage(usage()));
    };
    match command.as_str() {
        "stats" => cmd_stats(opts),
        "lemma" => cmd_lemma(opts),
        "trace" => cmd_trace(opts),
        "scan" => cmd_scan(opts),
        "anneal" => cmd_anneal(opts),
        "fit" => cmd_fit(opts),
        other => Err(Failure::usage(format!("unknown command `{other}`\n{}", usage()))),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let opts = match parse_args(&args) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    if opts.switch("help") {
        print!("{}", usage());
        return ExitCode::SUCCESS;
    }
    match dispatch(&opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
