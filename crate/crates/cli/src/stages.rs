//! One function per subcommand.  Each reads its inputs, writes its artifacts
//! into the output directory and saves `<stage>.log` next to them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use rug::ops::Pow;
use rug::{Float, Integer};

use rankbound::analytic::{analytic_rank_bound, AnalyticBoundParams};
use rankbound::classgroup::{repair_protected, selmer_lower_bound, upper_bound_2rank, PipelineParams, SelmerParams};
use rankbound::cubic::{bach_bound, build_factor_base, julia_reduce, maximalize, maximalize_at, BinaryCubicForm, CubicField, FactorBase};
use rankbound::elliptic::{tate_local, two_division_cubic, LocalReductionData};
use rankbound::gf2::{prune, SparseBitMatrix};
use rankbound::io::{self, CurveSpec};
use rankbound::numeric::{is_prime, primes_below};
use rankbound::planner::{alpha_exact_bits, alpha_shorthand, SievePlan};
use rankbound::rank::{compute_bk_terms, rank_report as bk_report, BKTerms};
use rankbound::sieve::{rational_relations, sieve_relations, Relation, RelationSet, SieveParams, Source};

use crate::log::{Log, Tag};
use crate::Fail;

type Res<T> = Result<T, Fail>;

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, text: &str) -> Res<()> {
    std::fs::write(dir.join(name), text).map_err(|e| Fail::Usage(format!("{name}: {e}")))
}

fn save(log: &Log, dir: &Path, stage: &str) -> Res<()> {
    log.save(dir, stage).map_err(|e| Fail::Usage(format!("{stage}.log: {e}")))
}

fn parse_root_number(s: &str) -> Res<i8> {
    match s {
        "1" | "+1" => Ok(1),
        "-1" => Ok(-1),
        _ => Err(Fail::Usage(format!("root number must be +1 or -1, got {s}"))),
    }
}

fn parse_int(s: &str, what: &str) -> Res<Integer> {
    s.parse::<Integer>().map_err(|e| Fail::Usage(format!("{what}: {e}")))
}

fn int_list(s: &str) -> Res<Vec<Integer>> {
    s.split([',', ' ']).filter(|t| !t.is_empty()).map(|t| parse_int(t, "prime list")).collect()
}

// ---------------------------------------------------------------------------
// curves

struct BadPrimes {
    primes: Vec<Integer>,
    /// The primes account for all of `|Delta|`.
    complete: bool,
}

fn bad_primes(spec: &CurveSpec, trial_bound: u64, log: &mut Log) -> Res<BadPrimes> {
    let disc = spec.curve.discriminant();
    let mut rest = disc.clone().abs();
    let mut primes = Vec::new();
    if !spec.bad_primes.is_empty() {
        for p in &spec.bad_primes {
            if !is_prime(p) || !disc.is_divisible(p) {
                return Err(Fail::Data(format!("{p} is not a prime dividing the discriminant")));
            }
            while rest.is_divisible(p) {
                rest /= p;
            }
            primes.push(p.clone());
        }
        log.put(Tag::Input, "bad_primes", join(&primes));
    } else {
        for p in primes_below(trial_bound) {
            if rest.is_divisible_u(p as u32) {
                while rest.is_divisible_u(p as u32) {
                    rest /= p as u32;
                }
                primes.push(Integer::from(p));
            }
        }
        if rest > 1 && is_prime(&rest) {
            primes.push(std::mem::replace(&mut rest, Integer::from(1)));
        }
        log.put(Tag::Unconditional, "bad_primes", join(&primes));
    }
    for d in &spec.local {
        if !primes.contains(&d.p) {
            return Err(Fail::Data(format!("local data at {} but it is not a bad prime", d.p)));
        }
    }
    if rest > 1 {
        log.note(format!("discriminant cofactor {rest} is unfactored; local data and conductor are incomplete"));
    }
    Ok(BadPrimes { primes, complete: rest == 1 })
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

/// Supplied local data where given, Tate's algorithm elsewhere.
fn local_data(spec: &CurveSpec, bad: &BadPrimes, log: &mut Log) -> Res<Vec<LocalReductionData>> {
    let mut out = Vec::new();
    for p in &bad.primes {
        let (d, tag) = match spec.local.iter().find(|d| &d.p == p) {
            Some(d) => (d.clone(), Tag::Input),
            None => (tate_local(&spec.curve, p)?, Tag::Unconditional),
        };
        let line = io::format_local(&d);
        let (k, v) = line.split_once(" = ").unwrap();
        log.put(tag, k, v);
        out.push(d);
    }
    Ok(out)
}

fn conductor_of(local: &[LocalReductionData]) -> Integer {
    local.iter().fold(Integer::from(1), |acc, d| acc * Integer::from(Pow::pow(&d.p, d.conductor_exponent)))
}

/// The cubic subfield of `Q(E[2])`, maximal at 2 and the bad primes.
fn field_of_curve(spec: &CurveSpec, bad: &BadPrimes, log: &mut Log) -> Res<CubicField> {
    let form = two_division_cubic(&spec.curve)?;
    let mut primes = vec![Integer::from(2)];
    primes.extend(bad.primes.iter().filter(|p| **p != 2).cloned());
    let field = CubicField::from_maximal_form(maximalize_at(&form, &primes)?)?;
    let tag = if bad.complete { Tag::Unconditional } else { Tag::Input };
    if !bad.complete {
        log.note("field is maximal at the listed primes only");
    }
    log.put(tag, "field_form", format_coeffs(&field.form));
    log.put(tag, "field_disc", &field.disc);
    log.put(Tag::Unconditional, "signature", format!("{} {}", field.r1, field.r2));
    Ok(field)
}

fn format_coeffs(f: &BinaryCubicForm) -> String {
    let c = f.coeffs();
    format!("{} {} {} {}", c[0], c[1], c[2], c[3])
}

fn load_curve(path: &Path, log: &mut Log) -> Res<CurveSpec> {
    let spec = io::parse_curve(&read(path)?)?;
    let a = spec.curve.a_invariants();
    log.put(Tag::Input, "curve", format!("[{}, {}, {}, {}, {}]", a[0], a[1], a[2], a[3], a[4]));
    Ok(spec)
}

#[derive(Args)]
pub struct CurveArgs {
    /// Curve file (`a1 .. a6`, optional `conductor`, `root_number`, `bad_primes`, `local.P`).
    #[arg(long)]
    pub curve: PathBuf,
    /// Trial-division bound when `bad_primes` is not given.
    #[arg(long, default_value_t = 100_000)]
    pub trial_bound: u64,
}

pub fn curve_analyze(args: &CurveArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let spec = load_curve(&args.curve, &mut log)?;
    let disc = spec.curve.discriminant();
    log.put(Tag::Unconditional, "disc", &disc);
    let bad = bad_primes(&spec, args.trial_bound, &mut log)?;
    let local = local_data(&spec, &bad, &mut log)?;
    let mut text = String::new();
    let _ = writeln!(text, "disc = {disc}");
    let _ = writeln!(text, "bad_primes = {}", join(&bad.primes));
    for d in &local {
        let _ = writeln!(text, "{}", io::format_local(d));
    }
    if bad.complete {
        let n = conductor_of(&local);
        if let Some(given) = &spec.conductor {
            if *given != n {
                return Err(Fail::Data(format!("supplied conductor {given} differs from the local data product {n}")));
            }
        }
        log.put(Tag::Unconditional, "conductor", &n);
        let _ = writeln!(text, "conductor = {n}");
    } else if let Some(n) = &spec.conductor {
        log.put(Tag::Input, "conductor", n);
        let _ = writeln!(text, "conductor = {n}");
    }
    let field = field_of_curve(&spec, &bad, &mut log)?;
    let bach = bach_bound(&field);
    log.put(Tag::Bach, "bach_bound", &bach);
    let _ = writeln!(text, "field_form = {}", format_coeffs(&field.form));
    let _ = writeln!(text, "field_disc = {}", field.disc);
    let _ = writeln!(text, "signature = {} {}", field.r1, field.r2);
    let _ = writeln!(text, "bach_bound = {bach}");
    write(out, "curve-analysis.txt", &text)?;
    write(out, "form.txt", &form_file(&field))?;
    save(&log, out, "curve-analyze")
}

fn form_file(field: &CubicField) -> String {
    format!("{}disc = {}\nsignature = {} {}\n", io::format_form(&field.form), field.disc, field.r1, field.r2)
}

// ---------------------------------------------------------------------------
// analytic bound

#[derive(Args)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub curve: PathBuf,
    /// Fejér kernel support `Delta >= 1`.
    #[arg(long)]
    pub delta: f64,
    /// File of `p a_p` lines covering the primes up to `e^(2 pi Delta)`.
    #[arg(long)]
    pub ap_cache: Option<PathBuf>,
    /// Largest prime cutoff computed by point counting.
    #[arg(long, default_value_t = 10_000_000)]
    pub prime_budget: u64,
    /// Overrides the curve file.
    #[arg(long)]
    pub conductor: Option<String>,
    /// `+1` or `-1`; overrides the curve file.
    #[arg(long, allow_hyphen_values = true)]
    pub root_number: Option<String>,
    /// Working precision in bits.
    #[arg(long, default_value_t = 128)]
    pub precision: u32,
    #[arg(long, default_value_t = 100_000)]
    pub trial_bound: u64,
}

pub fn analytic_bound(args: &AnalyticArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let spec = load_curve(&args.curve, &mut log)?;
    log.put(Tag::Input, "delta", args.delta);
    let conductor = if let Some(n) = &args.conductor {
        let n = parse_int(n, "--conductor")?;
        log.put(Tag::Input, "conductor", &n);
        n
    } else if let Some(n) = &spec.conductor {
        log.put(Tag::Input, "conductor", n);
        n.clone()
    } else {
        let bad = bad_primes(&spec, args.trial_bound, &mut log)?;
        if !bad.complete {
            return Err(Fail::Usage("conductor unknown; pass --conductor or list bad_primes in the curve file".into()));
        }
        let n = conductor_of(&local_data(&spec, &bad, &mut log)?);
        log.put(Tag::Unconditional, "conductor", &n);
        n
    };
    let eps = match (&args.root_number, spec.root_number) {
        (Some(s), _) => Some(parse_root_number(s)?),
        (None, e) => e,
    };
    match eps {
        Some(e) => log.put(Tag::Input, "root_number", format!("{e:+}")),
        None => log.note("no root number; parity refinement skipped"),
    }
    let cache = match &args.ap_cache {
        Some(p) => {
            let c = io::read_ap_cache(&read(p)?)?;
            log.put(Tag::Input, "ap_cache_max_prime", c.max_prime());
            Some(c)
        }
        None => None,
    };
    let mut params = AnalyticBoundParams::new(args.delta, conductor, eps);
    params.prec = args.precision;
    params.delta = Float::with_val(args.precision, args.delta);
    params.prime_budget = args.prime_budget;
    let b = analytic_rank_bound(&spec.curve, &params, &spec.local, cache.as_ref())?;
    let f = |x: &Float| format!("{:.12}", x.to_f64());
    log.put(Tag::Unconditional, "prime_cutoff", b.prime_cutoff);
    log.put(Tag::Unconditional, "arithmetic_term", f(&b.arithmetic));
    log.put(Tag::Unconditional, "archimedean_term", f(&b.archimedean));
    log.put(Tag::Unconditional, "conductor_term", f(&b.conductor));
    log.put(Tag::Grh, "analytic_rank_bound", f(&b.raw));
    let mut text = format!(
        "delta = {}\nprime_cutoff = {}\narithmetic_term = {}\narchimedean_term = {}\nconductor_term = {}\nraw_bound = {}\n",
        args.delta,
        b.prime_cutoff,
        f(&b.arithmetic),
        f(&b.archimedean),
        f(&b.conductor),
        f(&b.raw)
    );
    if let Some(m) = b.parity_refined {
        log.put(Tag::Grh, "parity_refined_bound", m);
        let _ = writeln!(text, "parity_refined_bound = {m}");
    }
    write(out, "analytic-bound.txt", &text)?;
    save(&log, out, "analytic-bound")
}

// ---------------------------------------------------------------------------
// fields

#[derive(Args)]
pub struct FieldArgs {
    /// Form file (`form = c3 c2 c1 c0`).
    #[arg(long)]
    pub form: PathBuf,
    /// Complete factorisation of `|disc|` as `p^e` terms, e.g. `2^6, 23`.
    #[arg(long)]
    pub disc_factors: Option<String>,
    /// Primes at which to remove the index; all others are taken as maximal.
    #[arg(long)]
    pub primes: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    pub trial_bound: u64,
}

fn parse_factors(s: &str) -> Res<Vec<(Integer, u32)>> {
    s.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (p, e) = t.split_once('^').unwrap_or((t, "1"));
            let e = e.parse::<u32>().map_err(|e| Fail::Usage(format!("exponent in {t}: {e}")))?;
            Ok((parse_int(p, "--disc-factors")?, e))
        })
        .collect()
}

pub fn field_reduce(args: &FieldArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let form = io::parse_form(&read(&args.form)?)?;
    log.put(Tag::Input, "form", format_coeffs(&form));
    let d = form.disc();
    log.put(Tag::Unconditional, "form_disc", &d);
    let field = if let Some(s) = &args.disc_factors {
        let fac = parse_factors(s)?;
        log.put(Tag::Input, "disc_factors", s);
        maximalize(&form, &fac)?
    } else {
        let primes = match &args.primes {
            Some(s) => {
                let p = int_list(s)?;
                log.put(Tag::Input, "index_primes", join(&p));
                p
            }
            None => {
                let mut rest = d.clone().abs();
                let mut p = Vec::new();
                for q in primes_below(args.trial_bound) {
                    let q2 = (q as u32).checked_mul(q as u32);
                    if q2.is_some_and(|q2| rest.is_divisible_u(q2)) {
                        p.push(Integer::from(q));
                    }
                    while rest.is_divisible_u(q as u32) {
                        rest /= q as u32;
                    }
                }
                if rest > 1 && !is_prime(&rest) {
                    log.note(format!("cofactor {rest} of the discriminant is unfactored and assumed squarefree"));
                }
                log.put(Tag::Unconditional, "index_primes", join(&p));
                p
            }
        };
        CubicField::from_maximal_form(maximalize_at(&form, &primes)?)?
    };
    let reduced = julia_reduce(&field.form)?;
    log.put(Tag::Unconditional, "field_form", format_coeffs(&reduced));
    log.put(Tag::Unconditional, "field_disc", &field.disc);
    log.put(Tag::Unconditional, "signature", format!("{} {}", field.r1, field.r2));
    log.put(Tag::Bach, "bach_bound", bach_bound(&field));
    write(out, "form.txt", &form_file(&CubicField { form: reduced, ..field }))?;
    save(&log, out, "field-reduce")
}

fn load_field(path: &Path, log: &mut Log) -> Res<CubicField> {
    let text = read(path)?;
    let form = io::parse_form(&text)?;
    let field = CubicField::from_maximal_form(form)?;
    if let Some(d) = io::parse_kv(&text)?.get("disc") {
        if parse_int(d, "disc")? != field.disc {
            return Err(Fail::Data(format!("recorded disc {d} differs from disc(form) {}", field.disc)));
        }
    }
    log.put(Tag::Input, "form", format_coeffs(&field.form));
    log.put(Tag::Unconditional, "field_disc", &field.disc);
    Ok(field)
}

// ---------------------------------------------------------------------------
// factor base

#[derive(Args)]
pub struct FactorBaseArgs {
    /// Form file of a maximal form.
    #[arg(long)]
    pub form: PathBuf,
    /// Exclusive bound on prime norms; defaults to the Bach bound.
    #[arg(long)]
    pub bound: Option<u64>,
}

pub fn factor_base(args: &FactorBaseArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let field = load_field(&args.form, &mut log)?;
    let bach = bach_bound(&field).to_u64().ok_or_else(|| Fail::Usage("Bach bound above 2^64".into()))?;
    log.put(Tag::Bach, "bach_bound", bach);
    let bound = match args.bound {
        Some(b) => {
            log.put(Tag::Input, "bound", b);
            b
        }
        None => bach + 1,
    };
    let base = build_factor_base(&field, bound);
    log.put(Tag::Unconditional, "factor_base_size", base.len());
    log.put(Tag::Unconditional, "rational_primes", base.rational_primes().len());
    for &(col, v) in &base.pole_offsets {
        log.put(Tag::Unconditional, &format!("pole_offset.{}", base.primes[col].p), v);
    }
    if !base.c3_supported {
        log.note("a prime dividing c3 lies above the bound");
    }
    let text = io::write_factor_base(&base);
    log.put(Tag::Unconditional, "factor_base_hash", io::sha256_hex(text.as_bytes()));
    write(out, "factor-base.txt", &text)?;
    save(&log, out, "factor-base")
}

fn load_base(path: &Path, log: &mut Log) -> Res<(FactorBase, String)> {
    let text = read(path)?;
    let base = io::read_factor_base(&text)?;
    let hash = io::sha256_hex(text.as_bytes());
    log.put(Tag::Input, "factor_base_hash", &hash);
    log.put(Tag::Input, "factor_base_size", base.len());
    Ok((base, hash))
}

// ---------------------------------------------------------------------------
// sieving

#[derive(Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub form: PathBuf,
    /// Smoothness bound.
    #[arg(long)]
    pub bound: u64,
    /// `log2` of the region size `2AB`.
    #[arg(long)]
    pub region_bits: f64,
    #[arg(long, default_value_t = 2000)]
    pub alpha_cutoff: u64,
    /// Use the fixed K28 constants (area `2^42.25`, norm 174.6 bits, `log2 B` 20.2).
    #[arg(long)]
    pub k28_reference: bool,
}

pub fn sieve_plan(args: &PlanArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let field = load_field(&args.form, &mut log)?;
    log.put(Tag::Input, "bound", args.bound);
    log.put(Tag::Input, "region_bits", args.region_bits);
    let plan = SievePlan::new(&field.form, args.bound, args.region_bits, args.alpha_cutoff, args.k28_reference)?;
    log.put(Tag::Unconditional, "log2_skew", format!("{:.4}", plan.skew_log2));
    log.put(Tag::Unconditional, "alpha", format!("{:.4}", plan.alpha));
    log.put(Tag::Unconditional, "alpha_bits", format!("{:.4}", alpha_exact_bits(plan.alpha)));
    log.put(Tag::Unconditional, "alpha_shorthand", format!("{:.4}", alpha_shorthand(plan.alpha)));
    if args.k28_reference {
        log.note("yield model uses the fixed K28 constants");
    }
    log.put(Tag::Unconditional, "a_max", &plan.a_max);
    log.put(Tag::Unconditional, "b_max", &plan.b_max);
    log.put(Tag::Heuristic, "expected_relations", format!("{:.0}", plan.predicted_relations));
    let text = format!(
        "log2_skew = {:.6}\nalpha = {:.6}\nregion_bits = {}\na_max = {}\nb_max = {}\nbound = {}\nexpected_relations = {:.0}\n",
        plan.skew_log2, plan.alpha, plan.region_bits, plan.a_max, plan.b_max, plan.smoothness_bound, plan.predicted_relations
    );
    write(out, "sieve-plan.txt", &text)?;
    save(&log, out, "sieve-plan")
}

#[derive(Args)]
pub struct SieveArgs {
    #[arg(long)]
    pub factor_base: PathBuf,
    #[arg(long)]
    pub a_max: i64,
    #[arg(long, default_value_t = 1)]
    pub b_min: i64,
    #[arg(long)]
    pub b_max: i64,
    /// Slack in bits below `log2 |F(a, -b)|`.
    #[arg(long, default_value_t = 20.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1 << 26)]
    pub segment_len: usize,
    #[arg(long, default_value_t = 1 << 28)]
    pub max_segment_len: usize,
    /// Also write the relations `p + 0 alpha`.
    #[arg(long)]
    pub rational: bool,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "relations.txt")]
    pub name: String,
}

pub fn sieve_run(args: &SieveArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let (base, hash) = load_base(&args.factor_base, &mut log)?;
    log.put(Tag::Input, "region", format!("[-{0}, {0}] x [{1}, {2}]", args.a_max, args.b_min, args.b_max));
    let params = SieveParams {
        a_max: args.a_max,
        b_min: args.b_min,
        b_max: args.b_max,
        threshold_bits: args.threshold,
        segment_len: args.segment_len,
        max_segment_len: args.max_segment_len,
    };
    let mut rels = sieve_relations(&base, &params)?;
    log.put(Tag::Unconditional, "sieved_relations", rels.len());
    if args.rational {
        let r = rational_relations(&base, base.bound);
        log.put(Tag::Unconditional, "rational_relations", r.len());
        rels.extend(r);
    }
    write(out, &args.name, &io::write_relations(&rels, &hash))?;
    save(&log, out, "sieve-run")
}

/// Relations from all files, checked against the base, in file order.
fn load_relations(paths: &[PathBuf], base: &FactorBase, hash: &str, log: &mut Log) -> Res<RelationSet> {
    let mut set = RelationSet::new();
    for p in paths {
        let (rels, h) = io::read_relations(&read(p)?)?;
        if h != hash {
            return Err(Fail::Data(format!("{} was written against factor base {h}, not {hash}", p.display())));
        }
        for r in &rels {
            r.verify(base).map_err(|e| Fail::Data(format!("{}: relation ({}, {}): {e}", p.display(), r.a, r.b)))?;
        }
        let source = |r: &Relation| if r.b == 0 { Source::Rational } else { Source::Sieved };
        for r in rels {
            let s = source(&r);
            set.push(r, s);
        }
    }
    log.put(Tag::Input, "relations", set.len());
    Ok(set)
}

// ---------------------------------------------------------------------------
// class group

fn protected_bound(given: Option<u64>, base: &FactorBase, log: &mut Log) -> Res<u64> {
    Ok(match given {
        Some(b) => {
            log.put(Tag::Input, "belabas_bound", b);
            b
        }
        None => {
            let b = bach_bound(&base.field).to_u64().ok_or_else(|| Fail::Usage("Bach bound above 2^64".into()))?;
            log.put(Tag::Bach, "protected_bound", b);
            b
        }
    })
}

#[derive(Args)]
pub struct UpperArgs {
    #[arg(long)]
    pub factor_base: PathBuf,
    #[arg(long, required = true, num_args = 1.., action = clap::ArgAction::Append)]
    pub relations: Vec<PathBuf>,
    /// Primes of norm at most this are never pruned; defaults to the Bach bound.
    #[arg(long)]
    pub belabas: Option<u64>,
    /// Relations sieved per empty protected column.
    #[arg(long, default_value_t = 8)]
    pub targeted_count: usize,
    #[arg(long, default_value_t = 1 << 24)]
    pub targeted_a_limit: i64,
}

pub fn classgroup_upper(args: &UpperArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let (base, hash) = load_base(&args.factor_base, &mut log)?;
    let mut set = load_relations(&args.relations, &base, &hash, &mut log)?;
    let protected = protected_bound(args.belabas, &base, &mut log)?;
    let params = PipelineParams {
        bound: base.bound,
        protected_bound: protected,
        sieve: SieveParams::default(),
        targeted_count: args.targeted_count,
        targeted_a_limit: args.targeted_a_limit,
        selmer: SelmerParams::default(),
    };
    let before = set.len();
    repair_protected(&base, &mut set, &params)?;
    let targeted: Vec<Relation> = set.relations[before..].to_vec();
    log.put(Tag::Unconditional, "targeted_relations", targeted.len());
    write(out, "relations-targeted.txt", &io::write_relations(&targeted, &hash))?;
    let (upper, report) = upper_bound_2rank(&base, &set.relations, protected)?;
    log.put(Tag::Unconditional, "removed_columns", upper.removed_columns);
    log.put(Tag::Unconditional, "removed_rows", upper.removed_rows);
    log.put(Tag::Unconditional, "matrix_rows", report.matrix.nrows());
    log.put(Tag::Grh, "class_group_2rank_upper", upper.nullity);
    if !upper.spurious.is_empty() {
        log.note(format!("{} nullspace vectors sit on at most three unprotected columns", upper.spurious.len()));
    }
    write(out, "matrix.txt", &io::write_matrix(&report.matrix, &hash))?;
    let text = format!(
        "factor-base-hash = {hash}\nprotected_bound = {protected}\nrelations = {}\ntargeted = {}\nremoved_columns = {}\nremoved_rows = {}\nspurious = {}\nnullity = {}\n",
        set.len(),
        targeted.len(),
        upper.removed_columns,
        upper.removed_rows,
        upper.spurious.len(),
        upper.nullity
    );
    write(out, "upper.txt", &text)?;
    save(&log, out, "classgroup-upper")
}

#[derive(Args)]
pub struct LowerArgs {
    #[arg(long)]
    pub factor_base: PathBuf,
    /// The relation files given to `classgroup-upper`, in the same order,
    /// plus its `relations-targeted.txt`.
    #[arg(long, required = true, num_args = 1.., action = clap::ArgAction::Append)]
    pub relations: Vec<PathBuf>,
    /// `matrix.txt` from `classgroup-upper`.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub belabas: Option<u64>,
    /// Stop after this many characters in a row add nothing.
    #[arg(long, default_value_t = 64)]
    pub stable_after: usize,
    #[arg(long, default_value_t = 4096)]
    pub max_characters: usize,
}

pub fn classgroup_lower(args: &LowerArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let (base, hash) = load_base(&args.factor_base, &mut log)?;
    let set = load_relations(&args.relations, &base, &hash, &mut log)?;
    let (stored, mhash) = io::read_matrix(&read(&args.matrix)?)?;
    if mhash != hash {
        return Err(Fail::Data(format!("matrix was built over factor base {mhash}, not {hash}")));
    }
    let protected = protected_bound(args.belabas, &base, &mut log)?;
    let m = SparseBitMatrix::from_relations(base.len(), &set.relations);
    let report = prune(&m, &base, protected, 2);
    if report.matrix.rows() != stored.rows() || stored.ncols() != base.len() {
        return Err(Fail::Data("relations do not reproduce the stored matrix".into()));
    }
    let params = SelmerParams { stable_after: args.stable_after, max_characters: args.max_characters };
    let (lower, cert) = selmer_lower_bound(&base, &set.relations, &m, &report.kept_rows, &params);
    log.put(Tag::Unconditional, "selmer_candidates", cert.candidates);
    log.put(Tag::Unconditional, "field_selmer_rank_lower", cert.rank);
    log.put(Tag::Unconditional, "unit_rank_plus_one", base.field.r1 + base.field.r2);
    log.put(Tag::Unconditional, "class_group_2rank_lower", lower);
    let mut text = format!(
        "factor-base-hash = {hash}\ncandidates = {}\nselmer_rank = {}\nlower = {lower}\ncharacters = {}\n---\n",
        cert.candidates,
        cert.rank,
        cert.characters.len()
    );
    for ch in &cert.characters {
        let bits: String = ch.bits.iter().map(|b| char::from(b'0' + b)).collect();
        let _ = writeln!(text, "{} {} {bits}", ch.q, ch.root);
    }
    write(out, "lower.txt", &text)?;
    save(&log, out, "classgroup-lower")
}

// ---------------------------------------------------------------------------
// rank report

#[derive(Args)]
pub struct RankArgs {
    /// Curve file; needed unless both `--u` and `--n` are given.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Form file for the cubic field; derived from the curve when absent.
    #[arg(long)]
    pub form: Option<PathBuf>,
    /// Bound on the 2-rank of the class group.
    #[arg(long)]
    pub g: Option<i64>,
    /// `upper.txt` from `classgroup-upper`, used when `--g` is absent.
    #[arg(long)]
    pub upper: Option<PathBuf>,
    #[arg(long)]
    pub u: Option<i64>,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub root_number: Option<String>,
    /// Known lower bound on the Mordell–Weil rank.
    #[arg(long)]
    pub rank_lower: Option<i64>,
    /// Row label.
    #[arg(long, default_value = "E")]
    pub label: String,
    #[arg(long, default_value_t = 100_000)]
    pub trial_bound: u64,
}

pub fn rank_report(args: &RankArgs, out: &Path) -> Res<()> {
    let mut log = Log::default();
    let spec = match &args.curve {
        Some(p) => Some(load_curve(p, &mut log)?),
        None => None,
    };
    let mut terms = match (args.u, args.n) {
        (Some(u), Some(n)) => {
            log.put(Tag::Input, "u", u);
            log.put(Tag::Input, "n", n);
            BKTerms::from_parts(None, u, n, None)
        }
        _ => {
            let spec = spec.as_ref().ok_or_else(|| Fail::Usage("give --curve, or both --u and --n".into()))?;
            let bad = bad_primes(spec, args.trial_bound, &mut log)?;
            let local = local_data(spec, &bad, &mut log)?;
            let field = match &args.form {
                Some(p) => load_field(p, &mut log)?,
                None => field_of_curve(spec, &bad, &mut log)?,
            };
            let t = compute_bk_terms(&spec.curve, &local, &field)?;
            log.put(Tag::Unconditional, "u", t.u);
            log.put(Tag::Unconditional, "n", t.n);
            log.put(Tag::Unconditional, "phi_m", join(&t.phi_m));
            if t.residual > 1 {
                log.note(format!("residual {} taken as multiplicative primes of odd valuation", t.residual));
            }
            t
        }
    };
    terms.g = match (args.g, &args.upper) {
        (Some(g), _) => {
            log.put(Tag::Input, "g", g);
            Some(g)
        }
        (None, Some(p)) => {
            let kv = io::parse_kv(&read(p)?)?;
            let g: i64 = kv
                .get("nullity")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Fail::Data(format!("{}: no nullity", p.display())))?;
            log.put(Tag::Grh, "g", g);
            Some(g)
        }
        (None, None) => return Err(Fail::Usage("give --g or --upper".into())),
    };
    terms.root_number = match (&args.root_number, spec.as_ref().and_then(|s| s.root_number)) {
        (Some(s), _) => Some(parse_root_number(s)?),
        (None, e) => e,
    };
    if let Some(e) = terms.root_number {
        log.put(Tag::Input, "root_number", format!("{e:+}"));
    }
    terms.known_rank_lower = args.rank_lower.or(spec.as_ref().and_then(|s| s.rank_lower));
    if let Some(lo) = terms.known_rank_lower {
        log.put(Tag::Input, "rank_lower", lo);
    }
    let rep = bk_report(&terms)?;
    log.put(Tag::Grh, "selmer_rank_upper", rep.upper);
    if let Some(gl) = rep.g_lower {
        log.put(Tag::Unconditional, "g_lower_from_rank", gl);
    }
    log.note(rep.summary());
    let eps = terms.root_number.map_or("?".to_string(), |e| format!("{e:+}"));
    let header = format!("{:>6} {:>4} {:>4} {:>4} {:>4} {:>6}", "r", "g", "u", "n", "eps", "sel2");
    let row = format!("{:>6} {:>4} {:>4} {:>4} {:>4} {:>6}", args.label, terms.g.unwrap(), terms.u, terms.n, eps, rep.upper);
    println!("{header}\n{row}");
    let mut text = format!("{header}\n{row}\n---\n");
    let _ = writeln!(text, "g = {}\nu = {}\nn = {}\nroot_number = {eps}\nselmer_upper = {}", terms.g.unwrap(), terms.u, terms.n, rep.upper);
    if let Some(lo) = rep.lower {
        let _ = writeln!(text, "rank_lower = {lo}\ndetermined = {}", rep.determined);
    }
    let _ = writeln!(text, "summary = {}", rep.summary());
    write(out, "rank-report.txt", &text)?;
    save(&log, out, "rank-report")
}
