use std::path::PathBuf;
use std::process::{Command, Output};
use vecsub::format::{read_filter, read_filter_file};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).to_string_lossy().into_owned()
}

fn vecsub(args: &[&str]) -> Output {
    vecsub_env(args, &[])
}

fn vecsub_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vecsub"));
    c.args(args).env_remove("VECSUB_CONFIG").env_remove("VECSUB_N_MAX").env_remove("VECSUB_SUPPORT_CAP");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "status {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn header(text: &str, key: &str) -> String {
    let p = format!("# {key}: ");
    text.lines().find_map(|l| l.strip_prefix(&p)).unwrap_or_else(|| panic!("no `{key}` in\n{text}")).to_string()
}

/// Data rows of a CSV body: everything after the column-name line.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vecsub-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn analyze_ex1_is_c1() {
    let out = stdout(&vecsub(&["analyze", &data("ex1.flt"), "--target-m", "1"]));
    assert!(out.contains("\n1,CONVERGENT(C^1),"), "{out}");
    assert_eq!(header(&out, "sum_rule_order"), "4");
    assert_eq!(header(&out, "symmetry D6"), "holds");
}

#[test]
fn analyze_a6_is_c4() {
    let out = stdout(&vecsub(&["analyze", &data("a6.flt"), "--target-m", "4"]));
    assert!(out.contains("\n4,CONVERGENT(C^4),"), "{out}");
    assert_eq!(header(&out, "sum_rule_order"), "6");
}

#[test]
fn analyze_haar_not_convergent() {
    let out = stdout(&vecsub(&["analyze", &data("haar.flt"), "--target-m", "0"]));
    assert!(out.contains("\n0,NOT_CONVERGENT,"), "{out}");
}

#[test]
fn analyze_is_reproducible_and_written_to_file() {
    let f = tmp("hat_report.txt");
    let f = f.to_str().unwrap();
    let a = stdout(&vecsub(&["analyze", &data("hat.flt"), "--target-m", "0", "--hermite", "0", "--output", f]));
    let b = stdout(&vecsub(&["analyze", &data("hat.flt"), "--target-m", "0", "--hermite", "0"]));
    assert_eq!(a, b);
    assert_eq!(std::fs::read_to_string(f).unwrap(), a);
    assert_eq!(header(&a, "hermite lambda_matching"), "holds");
    assert!(a.contains("\n0,CONVERGENT(C^0),"), "{a}");
}

#[test]
fn run_hat_gives_65_hat_samples() {
    let out = stdout(&vecsub(&["run", &data("hat.flt"), "--n", "5", "--exact"]));
    let rs = rows(&out);
    assert_eq!(rs.len(), 65);
    assert_eq!(header(&out, "beta"), "1");
    for r in &rs {
        let k: i64 = r[0].parse().unwrap();
        let want = vecsub::scalar::q(32 - k.abs(), 32);
        assert_eq!(r[2], vecsub::scalar::format_q(&want), "k = {k}");
    }
    assert_eq!(rs[0][1], "-1");
    assert_eq!(rs[64][1], "1");
}

#[test]
fn run_a4_matches_the_oracle() {
    let run = stdout(&vecsub(&["run", &data("a4.flt"), "--n", "6"]));
    let orc = stdout(&vecsub(&["oracle", "--order", "4", "--lattice", "quincunx", "--level", "6"]));
    let mut want = std::collections::HashMap::new();
    for r in rows(&orc) {
        want.insert((r[0].clone(), r[1].clone()), r[4].parse::<f64>().unwrap());
    }
    let mut worst = 0.0f64;
    for r in rows(&run) {
        let v: f64 = r[4].parse().unwrap();
        let w = want.get(&(r[0].clone(), r[1].clone())).copied().unwrap_or(0.0);
        worst = worst.max((v - w).abs());
    }
    assert!(worst < 1e-3, "sup error {worst}");
}

#[test]
fn derivative_run_is_scaled() {
    let n = 4;
    let out = stdout(&vecsub(&["run", &data("a4.flt"), "--n", &n.to_string(), "--mu", "1,0", "--u", "gen1", "--exact"]));
    let s = vecsub::DilationSpec::new(2, 2).unwrap();
    let a = vecsub::fixtures::a4().mask;
    let vj = vecsub::sumrules::matching_jet(&a, &s, 1).unwrap();
    let u = vecsub::spaces::mom_generators(&vj, &vecsub::MultiIndex(vec![1, 0])).unwrap().gens.remove(0);
    let mut w = vecsub::MatrixFilter::delta_row(2, 2, 0);
    for _ in 0..n {
        w = vecsub::filter::subdivision_apply(&a, &s, &w).unwrap();
    }
    let raw = w.convolve(&u).unwrap();
    let scale = vecsub::scalar::qi(2i64.pow(n));
    for r in rows(&out) {
        let k = vec![r[0].parse::<i64>().unwrap(), r[1].parse().unwrap()];
        let want = raw.get(&k).map(|b| &b[0] * &scale).unwrap_or_default();
        assert_eq!(r[4], vecsub::scalar::format_q(&want), "at {k:?}");
    }
}

#[test]
fn rate_hat_is_exact() {
    let out = stdout(&vecsub(&["rate", &data("hat.flt"), "--oracle", "bspline:2"]));
    assert!(header(&out, "tags").split("; ").any(|t| t == "exact"), "{out}");
    assert_eq!(header(&out, "exponent"), "inf");
}

#[test]
fn rate_a4_decays_at_order_two() {
    let out = stdout(&vecsub(&["rate", &data("a4.flt"), "--oracle", "balanced:4:quincunx", "--n0", "3", "--n1", "6", "--sm-inf", "3"]));
    let e: f64 = header(&out, "exponent").parse().unwrap();
    assert!(e >= 1.7, "{out}");
    assert_eq!(header(&out, "theory_S"), "2.000000");
    assert_eq!(header(&out, "monotone"), "true");
}

#[test]
fn construct_balanced_reproduces_a4() {
    let b4 = tmp("b4.flt");
    std::fs::write(&b4, stdout(&vecsub(&["construct", "bspline", "4", "--dim", "2"]))).unwrap();
    let out = stdout(&vecsub(&["construct", "balanced", b4.to_str().unwrap(), "--lattice", "quincunx"]));
    let got = read_filter(&out).unwrap();
    let want = read_filter_file(std::path::Path::new(&data("a4.flt"))).unwrap();
    assert_eq!(got.filter, want.filter);
}

#[test]
fn check_symmetry_results() {
    let out = stdout(&vecsub(&["check-symmetry", &data("a4.flt")]));
    assert!(out.contains("\nholds,true\n"), "{out}");
    let out = stdout(&vecsub(&["check-symmetry", &data("ex2.flt")]));
    assert!(out.contains("\nholds,false\n"), "{out}");
    assert!(out.contains("witness_point,(-3,0)"), "{out}");
}

#[test]
fn transform_keeps_sum_rules() {
    let t = tmp("a4t.flt");
    let text = stdout(&vecsub(&["transform", &data("a4.flt"), "--u", &data_u()]));
    std::fs::write(&t, text).unwrap();
    let out = stdout(&vecsub(&["analyze", t.to_str().unwrap(), "--target-m", "0", "--n-max", "4"]));
    assert_eq!(header(&out, "sum_rule_order"), "4");
}

fn data_u() -> String {
    let p = tmp("u.flt");
    std::fs::write(&p, "filter d=2 r=2 s=2\n(0,0): 1 0 1/2 1\n(1,0): 0 0 -1/4 0\n").unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn transform_rejects_a_non_monomial_determinant() {
    let p = tmp("bad_u.flt");
    std::fs::write(&p, "filter d=2 r=2 s=2\n(0,0): 1 0 0 1\n(1,0): 1 0 0 0\n").unwrap();
    let o = vecsub(&["transform", &data("a4.flt"), "--u", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn exit_codes() {
    let bad = tmp("bad.flt");
    std::fs::write(&bad, "filter d=1 r=1\n(0): 1/x\n").unwrap();
    let o = vecsub(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2, column"));
    assert_eq!(vecsub(&["analyze", "/nonexistent.flt"]).status.code(), Some(2));
    // u = e1 does not lie in mom_{υ,(1,0)}
    let o = vecsub(&["run", &data("a4.flt"), "--mu", "1,0", "--u", "e1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("jet order 0"));
    assert_eq!(vecsub(&["--support-cap", "10", "run", &data("a4.flt"), "--n", "3"]).status.code(), Some(4));
    assert_eq!(vecsub_env(&["run", &data("a4.flt"), "--n", "3"], &[("VECSUB_SUPPORT_CAP", "10")]).status.code(), Some(4));
    assert_eq!(vecsub(&["--strict", "smooth", &data("ex1.flt"), "--n-max", "3"]).status.code(), Some(5));
    assert_eq!(vecsub(&["smooth", &data("ex1.flt"), "--n-max", "3"]).status.code(), Some(0));
}

#[test]
fn config_file_and_env() {
    let cfg = tmp("vecsub.conf");
    std::fs::write(&cfg, "# defaults\nrun.n = 3\nn-max = 4\n").unwrap();
    let c = cfg.to_str().unwrap();
    let out = stdout(&vecsub(&["--config", c, "run", &data("hat.flt")]));
    assert_eq!(header(&out, "level"), "3");
    assert_eq!(rows(&out).len(), 17);
    let out = stdout(&vecsub(&["--config", c, "run", &data("hat.flt"), "--n", "2"]));
    assert_eq!(header(&out, "level"), "2");
    let out = stdout(&vecsub(&["--config", c, "smooth", &data("hat.flt"), "--p", "inf"]));
    assert_eq!(rows(&out)[0][4], "4");
    let out = stdout(&vecsub_env(&["smooth", &data("hat.flt"), "--p", "inf"], &[("VECSUB_CONFIG", c), ("VECSUB_N_MAX", "5")]));
    assert_eq!(rows(&out)[0][4], "5");
}
