use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankbound"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn value(log: &str, key: &str) -> String {
    log.lines()
        .find_map(|l| l.split_once("] ").and_then(|(_, r)| r.strip_prefix(&format!("{key} = "))).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in\n{log}"))
}

const E37: &str = "a1 = 0\na2 = 0\na3 = 1\na4 = -1\na6 = 0\nroot_number = -1\n";

const E28: &str = "\
a1 = 1
a2 = -1
a3 = 1
a4 = -20067762415575526585033208209338542750930230312178956502
a6 = 34481611795030556467032985690390720374855944359319180361266008296291939448732243429
root_number = +1
rank_lower = 28
local.3 = additive I0* 0 6 2
";

#[test]
fn analytic_bound_on_conductor_37() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("e.txt"), E37).unwrap();
    let log = ok(dir.path(), &["analytic-bound", "--curve", "e.txt", "--delta", "1.5"]);
    assert!(log.contains("[unconditional] conductor = 37"));
    let raw: f64 = value(&log, "analytic_rank_bound").parse().unwrap();
    assert!((1.0..1.1).contains(&raw), "{raw}");
    assert_eq!(value(&log, "parity_refined_bound"), "1");
    assert!(log.lines().any(|l| l.starts_with("[GRH-conditional] analytic_rank_bound")));
    // the same number straight from the library
    let e = rankbound::elliptic::EllipticCurve::from_i64([0, 0, 1, -1, 0]).unwrap();
    let p = rankbound::analytic::AnalyticBoundParams::new(1.5, rug::Integer::from(37), Some(-1));
    let want = rankbound::analytic::analytic_rank_bound(&e, &p, &[], None).unwrap().raw.to_f64();
    assert!((raw - want).abs() < 1e-9);
    assert!(dir.path().join("analytic-bound.txt").exists() && dir.path().join("analytic-bound.log").exists());
}

#[test]
fn budget_and_usage_exit_codes() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("e.txt"), E37).unwrap();
    assert_eq!(run(dir.path(), &["analytic-bound", "--curve", "e.txt", "--delta", "3"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["analytic-bound", "--curve", "e.txt"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["analytic-bound", "--curve", "missing.txt", "--delta", "1"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["no-such-stage"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn rank_report_rows() {
    let dir = TempDir::new().unwrap();
    let rows = [
        ("20", "15", "1", "5", "+1", "20"),
        ("21", "14", "2", "5", "-1", "21"),
        ("22", "16", "2", "4", "+1", "22"),
        ("23", "15", "1", "8", "-1", "23"),
        ("24", "16", "2", "7", "+1", "24"),
        ("27", "22", "1", "5", "-1", "27"),
        ("28", "20", "2", "6", "+1", "28"),
    ];
    for (r, g, u, n, eps, sel) in rows {
        let out = ok(dir.path(), &["rank-report", "--label", r, "--g", g, "--u", u, "--n", n, "--root-number", eps]);
        let row: Vec<&str> = out.lines().last().unwrap().split_whitespace().collect();
        assert_eq!(row, [r, g, u, n, eps, sel]);
    }
}

#[test]
fn rank_report_from_e28_local_data() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("e28.txt"), E28).unwrap();
    let out = ok(dir.path(), &["rank-report", "--curve", "e28.txt", "--g", "20", "--label", "28"]);
    assert!(out.contains("[input] local.3 = additive I0* 0 6 2"));
    assert_eq!(value(&out, "u"), "2");
    assert_eq!(value(&out, "n"), "6");
    assert!(out.contains("# rank = 28 (GRH)"));
    let row: Vec<&str> = out.lines().last().unwrap().split_whitespace().collect();
    assert_eq!(row, ["28", "20", "2", "6", "+1", "28"]);
    // a lower bound above the Selmer bound is inconsistent
    assert_eq!(run(dir.path(), &["rank-report", "--curve", "e28.txt", "--g", "18"]).status.code(), Some(2));
}

/// Field reduction through the lower bound for `x^3 - x^2 + 3x + 6`
/// (class number 4, 2-rank 1), into `out`.
fn pipeline(root: &Path, out: &str, workers: &str) -> BTreeMap<String, Vec<u8>> {
    std::fs::write(root.join("f.txt"), "form = 1 -1 3 6\n").unwrap();
    let o = |args: &[&str]| {
        let mut v = args.to_vec();
        v.extend(["--out", out, "--workers", workers]);
        ok(root, &v)
    };
    o(&["field-reduce", "--form", "f.txt"]);
    let fb = format!("{out}/factor-base.txt");
    o(&["factor-base", "--form", &format!("{out}/form.txt"), "--bound", "1300"]);
    o(&["sieve-run", "--factor-base", &fb, "--a-max", "2000", "--b-max", "100", "--threshold", "12", "--rational"]);
    let rels = format!("{out}/relations.txt");
    let upper = o(&["classgroup-upper", "--factor-base", &fb, "--relations", &rels]);
    assert_eq!(value(&upper, "class_group_2rank_upper"), "1");
    let matrix = format!("{out}/matrix.txt");
    let mut args = vec!["classgroup-lower", "--factor-base", &fb, "--matrix", &matrix, "--relations", &rels];
    let targeted = format!("{out}/relations-targeted.txt");
    if root.join(&targeted).exists() {
        args.push(&targeted);
    }
    let lower = o(&args);
    assert_eq!(value(&lower, "class_group_2rank_lower"), "1");
    let mut files = BTreeMap::new();
    for e in std::fs::read_dir(root.join(out)).unwrap() {
        let e = e.unwrap();
        files.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap());
    }
    files
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = pipeline(dir.path(), "a", "1");
    let b = pipeline(dir.path(), "b", "4");
    let c = pipeline(dir.path(), "a", "2");
    assert!(a.len() >= 11, "{:?}", a.keys());
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (name, bytes) in &a {
        assert!(b[name] == *bytes, "{name} differs between worker counts");
        assert!(c[name] == *bytes, "{name} differs on rerun");
    }
}

#[test]
fn mismatched_stages_are_rejected() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(d.join("f.txt"), "form = 1 1 3 -6\n").unwrap();
    ok(d, &["factor-base", "--form", "f.txt", "--bound", "1300", "--out", "x"]);
    ok(d, &["factor-base", "--form", "f.txt", "--bound", "1400", "--out", "y"]);
    ok(d, &["sieve-run", "--factor-base", "x/factor-base.txt", "--a-max", "500", "--b-max", "20", "--threshold", "12", "--out", "x"]);
    let o = run(d, &["classgroup-upper", "--factor-base", "y/factor-base.txt", "--relations", "x/relations.txt", "--out", "y"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("factor base"));
    // a tampered relation fails verification
    let text = std::fs::read_to_string(d.join("x/relations.txt")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let last = lines.len() - 1;
    lines[last] = lines[last].replacen(' ', "7 ", 1);
    std::fs::write(d.join("x/bad.txt"), lines.join("\n") + "\n").unwrap();
    let o = run(d, &["classgroup-upper", "--factor-base", "x/factor-base.txt", "--relations", "x/bad.txt", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    // a matrix from another base
    ok(d, &["sieve-run", "--factor-base", "y/factor-base.txt", "--a-max", "2000", "--b-max", "100", "--threshold", "12", "--rational", "--out", "y"]);
    ok(d, &["classgroup-upper", "--factor-base", "y/factor-base.txt", "--relations", "y/relations.txt", "--out", "y"]);
    let o = run(d, &["classgroup-lower", "--factor-base", "x/factor-base.txt", "--relations", "x/relations.txt", "--matrix", "y/matrix.txt", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(d.join("e.txt"), E37).unwrap();
    std::fs::write(d.join("run.cfg"), "# defaults\ncurve = e.txt\ndelta = 1.0\nworkers = 2\nbound = 99\n").unwrap();
    let from_config = ok(d, &["--config", "run.cfg", "analytic-bound"]);
    assert_eq!(value(&from_config, "delta"), "1");
    assert_eq!(value(&from_config, "prime_cutoff"), "535");
    let overridden = ok(d, &["analytic-bound", "--config", "run.cfg", "--delta", "1.5"]);
    assert_eq!(value(&overridden, "delta"), "1.5");
    std::fs::write(d.join("bad.cfg"), "delta\n").unwrap();
    assert_eq!(run(d, &["--config", "bad.cfg", "analytic-bound"]).status.code(), Some(1));
}

#[test]
fn curve_analyze_writes_a_usable_form() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    // 11a: y^2 + y = x^3 - x^2 - 10x - 20
    std::fs::write(d.join("e.txt"), "a1 = 0\na2 = -1\na3 = 1\na4 = -10\na6 = -20\nconductor = 11\n").unwrap();
    let log = ok(d, &["curve-analyze", "--curve", "e.txt"]);
    assert_eq!(value(&log, "conductor"), "11");
    assert_eq!(value(&log, "local.11"), "split I5 1 5 1");
    assert_eq!(value(&log, "field_disc"), "-44");
    let fb = ok(d, &["factor-base", "--form", "form.txt", "--bound", "200"]);
    assert!(value(&fb, "factor_base_size").parse::<usize>().unwrap() > 20);
    std::fs::write(d.join("e.txt"), "a1 = 0\na2 = -1\na3 = 1\na4 = -10\na6 = -20\nconductor = 13\n").unwrap();
    assert_eq!(run(d, &["curve-analyze", "--curve", "e.txt"]).status.code(), Some(2));
}

#[test]
fn k28_factor_base_count() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let form = "form = 64023127168000 10309553525987840512490787747 -3858878002265332645698861066081585182608 -69043295714402138353376748510210837676894689434302674\n";
    std::fs::write(d.join("k28.txt"), form).unwrap();
    let log = ok(d, &["factor-base", "--form", "k28.txt", "--bound", "1202639"]);
    // the published figure is 93,121; the library and an independent gcd
    // count (core acceptance test) both give 92,945
    let base = rankbound::cubic::build_factor_base(
        &rankbound::cubic::CubicField::from_maximal_form(rankbound::io::parse_form(form).unwrap()).unwrap(),
        1_202_639,
    );
    assert_eq!(value(&log, "factor_base_size"), base.len().to_string());
    println!("K28 factor base: {} primes (published 93121)", base.len());
}
