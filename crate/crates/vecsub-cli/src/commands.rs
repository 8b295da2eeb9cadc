use crate::{AnalyzeArgs, Cli, Cmd, ConstructKind, FilterArg, OracleArgs, RateArgs, RunArgs, SmoothArgs, SymmetryArgs, TransformArgs};
use anyhow::{anyhow, bail, Context, Result};
use num::Zero;
use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;
use vecsub::constructions::{
    balanced_from_scalar, bspline_filter, builtin_group, check_symmetry, tensor_filter, three_direction_filter, SymmetrySpec,
};
use vecsub::filter::{to_f64, AnyFilter, BoxRange};
use vecsub::format::{read_filter_file, write_any, write_filter};
use vecsub::hermite::{ghsd_convergence_check, lambda_matching_check, GhsdVerdict, HermiteType};
use vecsub::lattice::{gamma_set, quincunx, sqrt3_matrix, IntMatrix};
use vecsub::oracle::{balanced_oracles, oracle_grid, SplineOracle};
use vecsub::scalar::{format_q, parse_q, Scalar, ScalarText};
use vecsub::scheme::{drv_index, measure_rate, run_scheme, RateTheory, SampledGrid};
use vecsub::smoothness::{convergence_check, default_n_max, sm_estimate, sm_estimate_adaptive, sm_infty_interval, Verdict};
use vecsub::spaces::mom_generators;
use vecsub::sumrules::{check_eigen_condition, matching_jet, sum_rule_order, DEFAULT_SUM_RULE_CAP};
use vecsub::transform::{column_reduce_matching, transform_filter, verify_strong};
use vecsub::{fixtures, DilationSpec, Error, MatrixFilter, MultiIndex, NormP, Q};

#[derive(Default)]
pub struct Status {
    pub inconclusive: bool,
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<Status> {
    match &cli.cmd {
        Cmd::Analyze(a) => analyze(a, out),
        Cmd::Smooth(a) => smooth(a, out),
        Cmd::Run(a) => run(a, out),
        Cmd::Rate(a) => rate(a, out),
        Cmd::Construct(a) => construct(&a.kind, out),
        Cmd::CheckSymmetry(a) => symmetry(a, out),
        Cmd::Transform(a) => transform(a, out),
        Cmd::Oracle(a) => oracle(a, out),
    }
}

struct Loaded {
    name: String,
    filter: AnyFilter,
    meta: BTreeMap<String, String>,
}

impl Loaded {
    fn rational(&self) -> Result<&MatrixFilter<Q>> {
        Ok(self.filter.as_rational().ok_or_else(|| Error::parse(1, 1, "this command needs a rational filter"))?)
    }

    fn dims(&self) -> (usize, usize, usize) {
        match &self.filter {
            AnyFilter::Rational(f) => (f.dim(), f.rows(), f.cols()),
            AnyFilter::Complex(f) => (f.dim(), f.rows(), f.cols()),
        }
    }

    fn spec(&self, arg: &FilterArg) -> Result<DilationSpec> {
        let m = match (arg.dilation, self.meta.get("dilation")) {
            (Some(m), _) => m,
            (None, Some(s)) => s.parse().map_err(|_| Error::parse(1, 1, format!("bad dilation meta `{s}`")))?,
            (None, None) => 2,
        };
        let (d, r, s) = self.dims();
        if r != s {
            bail!(Error::DimensionMismatch(format!("mask must be square, got {r}x{s}")));
        }
        Ok(DilationSpec::new(m, d)?)
    }
}

fn load(src: &str) -> Result<Loaded> {
    if let Some(name) = src.strip_prefix("fixture:") {
        let mut meta = BTreeMap::new();
        meta.insert("dilation".to_string(), "2".to_string());
        let mask = match name {
            "hat" => fixtures::hat(),
            "haar" => fixtures::haar(),
            _ => {
                let fx = fixtures::by_name(name).ok_or_else(|| Error::parse(1, 1, format!("unknown fixture `{name}`")))?;
                if let Some((g, c)) = &fx.symmetry {
                    meta.insert("symmetry".to_string(), g.to_string());
                    meta.insert("centres".to_string(), format_centres(c));
                }
                fx.mask
            }
        };
        return Ok(Loaded { name: name.to_string(), filter: AnyFilter::Rational(mask), meta });
    }
    let rec = read_filter_file(std::path::Path::new(src)).with_context(|| format!("reading {src}"))?;
    let name = rec.meta.get("name").cloned().unwrap_or_else(|| src.to_string());
    Ok(Loaded { name, filter: rec.filter, meta: rec.meta })
}

fn format_centres(c: &[Vec<Q>]) -> String {
    c.iter().map(|p| p.iter().map(format_q).collect::<Vec<_>>().join(",")).collect::<Vec<_>>().join(";")
}

fn parse_centres(s: &str, d: usize) -> Result<Vec<Vec<Q>>> {
    s.split(';')
        .map(|p| {
            let c: Vec<Q> = p
                .split(',')
                .map(|x| parse_q(x).ok_or_else(|| Error::parse(1, 1, format!("bad centre coordinate `{x}`"))))
                .collect::<std::result::Result<_, _>>()?;
            if c.len() != d {
                bail!(Error::parse(1, 1, format!("centre `{p}` needs {d} coordinates")));
            }
            Ok(c)
        })
        .collect()
}

fn parse_mu(s: Option<&str>, d: usize) -> Result<MultiIndex> {
    let Some(s) = s else { return Ok(MultiIndex::zero(d)) };
    let v: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::parse(1, 1, format!("bad multi-index entry `{x}`"))))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != d {
        bail!(Error::parse(1, 1, format!("multi-index `{s}` needs {d} entries")));
    }
    Ok(MultiIndex(v))
}

fn unit_index(s: &str, r: usize) -> Option<Result<usize>> {
    let l: usize = s.strip_prefix('e')?.parse().ok()?;
    Some(if l == 0 || l > r { Err(anyhow!(Error::parse(1, 1, format!("`{s}` is out of range for r = {r}")))) } else { Ok(l - 1) })
}

/// 1×r data from `eL` or a file.
fn parse_data(s: &str, d: usize, r: usize) -> Result<MatrixFilter<Q>> {
    if let Some(l) = unit_index(s, r) {
        return Ok(MatrixFilter::delta_row(d, r, l?));
    }
    let f = load(s)?.rational()?.clone();
    if f.dim() != d || f.rows() != 1 || f.cols() != r {
        bail!(Error::DimensionMismatch(format!("data must be 1x{r} on Z^{d}")));
    }
    Ok(f)
}

/// r×1 analysis filter from `eL`, `genK` or a file.
fn parse_u(s: &str, a: &MatrixFilter<Q>, spec: &DilationSpec, mu: &MultiIndex) -> Result<MatrixFilter<Q>> {
    let (d, r) = (a.dim(), a.rows());
    if let Some(l) = unit_index(s, r) {
        return Ok(MatrixFilter::delta_col(d, r, l?));
    }
    if let Some(k) = s.strip_prefix("gen").and_then(|k| k.parse::<usize>().ok()) {
        let vj = matching_jet(a, spec, mu.order()).context("matching jet for the mom generators")?;
        let mut g = mom_generators(&vj, mu)?;
        if k == 0 || k > g.gens.len() {
            bail!(Error::parse(1, 1, format!("`{s}`: mom_{{υ,{mu}}} has {} generators", g.gens.len())));
        }
        return Ok(g.gens.swap_remove(k - 1));
    }
    let f = load(s)?.rational()?.clone();
    if f.dim() != d || f.rows() != r || f.cols() != 1 {
        bail!(Error::DimensionMismatch(format!("u must be {r}x1 on Z^{d}")));
    }
    Ok(f)
}

fn lattice_matrix(name: &str) -> Result<IntMatrix> {
    match name {
        "quincunx" => Ok(quincunx()),
        "sqrt3" => Ok(sqrt3_matrix()),
        _ => Err(anyhow!(Error::parse(1, 1, format!("unknown lattice `{name}` (quincunx, sqrt3)")))),
    }
}

/// FNV-1a over the canonical text of the filter.
fn filter_hash(f: &AnyFilter) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in write_any(f, &[]).bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

fn fmt_f(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.6}")
    }
}

fn fmt_eigenvalue(z: &vecsub::C64) -> String {
    let re = format!("{:.10}", z.re);
    if z.im.abs() < 1e-12 {
        re
    } else {
        format!("{re}{:+.10}i", z.im)
    }
}

fn emit(out: &mut dyn Write, lines: &[String]) -> Result<()> {
    for l in lines {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<Status> {
    let ld = load(&args.input.filter)?;
    let spec = ld.spec(&args.input)?;
    let mut status = Status::default();
    let mut lines = vec![
        "# vecsub analyze".to_string(),
        format!("# filter: {}", ld.name),
        format!("# hash: fnv1a64:{}", filter_hash(&ld.filter)),
    ];
    let (d, r, _) = ld.dims();
    lines.push(format!("# d: {d}"));
    lines.push(format!("# r: {r}"));
    lines.push(format!("# dilation: {}", spec.m));
    let rows = match &ld.filter {
        AnyFilter::Rational(a) => analyze_mask(a, &spec, args, &mut lines, &mut status)?,
        AnyFilter::Complex(a) => analyze_mask(a, &spec, args, &mut lines, &mut status)?,
    };
    if let Ok(a) = ld.rational() {
        let group = args.group.clone().or_else(|| ld.meta.get("symmetry").cloned());
        if let Some(g) = group {
            let centres = match args.centres.as_ref().or(ld.meta.get("centres")) {
                Some(c) => parse_centres(c, d)?,
                None => vec![vec![Q::zero(); d]; r],
            };
            let grp = builtin_group(&g).ok_or_else(|| Error::parse(1, 1, format!("unknown group `{g}`")))?;
            let res = check_symmetry(a, &spec, &SymmetrySpec::new(grp, centres)).context("symmetry check")?;
            lines.push(format!("# symmetry {g}: {}", if res.holds { "holds" } else { "fails" }));
            if let Some(w) = res.witness {
                lines.push(format!("# symmetry witness: element {:?} at {:?}, block {:?}", w.element, w.point, w.block));
            }
        }
    }
    lines.extend(rows);
    emit(out, &lines)?;
    if let Some(p) = &args.output {
        let mut text = lines.join("\n");
        text.push('\n');
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(status)
}

fn analyze_mask<T: ScalarText>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    args: &AnalyzeArgs,
    lines: &mut Vec<String>,
    status: &mut Status,
) -> Result<Vec<String>> {
    let t0 = Instant::now();
    let targets = if args.target_m.is_empty() { vec![0] } else { args.target_m.clone() };
    let top = *targets.iter().max().unwrap();
    let n_max = args.n_max.unwrap_or_else(|| default_n_max(a.dim()));
    let eig = check_eigen_condition(a, spec, top).context("eigenvalues of the symbol at zero")?;
    let ev: Vec<String> = eig.eigenvalues.iter().map(fmt_eigenvalue).collect();
    lines.push(format!("# eigenvalues: {}", ev.join(" ")));
    lines.push(format!("# eigen simple_one: {}", eig.simple_one));
    lines.push(format!("# eigen max_other_modulus: {}", fmt_f(eig.max_other_modulus)));
    lines.push(format!("# eigen bound m^-{top}: {}", fmt_f(eig.bound)));
    let sr = match sum_rule_order(a, spec, DEFAULT_SUM_RULE_CAP.max(top + 2)) {
        Ok(sr) => Some(sr),
        Err(Error::NotSimple) => {
            lines.push("# sum_rule_order: undefined (1 is not a simple eigenvalue)".into());
            None
        }
        Err(e) => return Err(anyhow!(e).context("sum rules")),
    };
    if let Some(sr) = &sr {
        lines.push(format!("# sum_rule_order: {}", sr.order));
        lines.push(format!("# sum_rule_diagnostic: {}", sr.diagnostic));
        lines.push(format!("# matching_pinned_component: {}", sr.jet.pinned + 1));
        for mu in sr.jet.jet.indices() {
            let row: Vec<String> = sr.jet.jet.get(mu).iter().map(|x| x.to_text()).collect();
            lines.push(format!("# matching_jet T{mu}: {}", row.join(" ")));
        }
    }
    if let (Some(h), Some(sr)) = (&args.hermite, &sr) {
        let lam = HermiteType::parse(h)?;
        let lc = lambda_matching_check(&sr.jet, &lam).context("Λ-matching check")?;
        lines.push(format!("# hermite type: {h}"));
        lines.push(format!("# hermite lambda_matching: {}", if lc.holds { "holds" } else { "fails" }));
        if let Some((l, nu)) = lc.failure {
            lines.push(format!("# hermite lambda_failure: component {} at {nu}", l + 1));
        }
    }
    let t_struct = t0.elapsed();
    let mut rows = vec!["target_m,verdict,sm_inf,sm_inf_stabilized,sm_2,sm_2_stabilized,reasons".to_string()];
    for &m in &targets {
        let rep = convergence_check(a, spec, m, n_max).with_context(|| format!("convergence check for m = {m}"))?;
        if rep.verdict == Verdict::Inconclusive {
            status.inconclusive = true;
        }
        let (si, sis) = rep.sm_inf.as_ref().map_or((String::new(), String::new()), |e| (fmt_f(e.value), e.stabilized.to_string()));
        let (s2, s2s) = rep.sm2.as_ref().map_or((String::new(), String::new()), |e| (fmt_f(e.value), e.stabilized.to_string()));
        rows.push(format!("{m},{},{si},{sis},{s2},{s2s},\"{}\"", rep.verdict, rep.reasons.join("; ")));
    }
    if let Some(h) = &args.hermite {
        let lam = HermiteType::parse(h)?;
        rows.push("hermite_m,ghsd_verdict,sm_inf,,,,reasons".to_string());
        for &m in &targets {
            let rep = ghsd_convergence_check(a, &lam, m, n_max).with_context(|| format!("Hermite check for m = {m}"))?;
            if rep.verdict == GhsdVerdict::Inconclusive {
                status.inconclusive = true;
            }
            let si = rep.sm_inf.as_ref().map_or(String::new(), |e| fmt_f(e.value));
            rows.push(format!("{m},{},{si},,,,\"{}\"", rep.verdict, rep.reasons.join("; ")));
        }
    }
    if args.timings {
        lines.push(format!("# time_structural_s: {:.3}", t_struct.as_secs_f64()));
        lines.push(format!("# time_total_s: {:.3}", t0.elapsed().as_secs_f64()));
    }
    Ok(rows)
}

fn parse_norms(s: &str) -> Result<Vec<NormP>> {
    s.split(',').map(|p| NormP::parse(p).ok_or_else(|| anyhow!(Error::parse(1, 1, format!("bad norm `{p}` (1, 2, inf)"))))).collect()
}

fn smooth(args: &SmoothArgs, out: &mut dyn Write) -> Result<Status> {
    let ld = load(&args.input.filter)?;
    let spec = ld.spec(&args.input)?;
    let ps = parse_norms(&args.p)?;
    match &ld.filter {
        AnyFilter::Rational(a) => smooth_mask(a, &spec, &ld.name, &ps, args, out),
        AnyFilter::Complex(a) => smooth_mask(a, &spec, &ld.name, &ps, args, out),
    }
}

fn smooth_mask<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, name: &str, ps: &[NormP], args: &SmoothArgs, out: &mut dyn Write) -> Result<Status> {
    let n_max = args.n_max.unwrap_or_else(|| default_n_max(a.dim()));
    let mut status = Status::default();
    let mut rows = Vec::new();
    let mut header = vec!["# vecsub smooth".to_string(), format!("# filter: {name}")];
    let mut sr = None;
    for &p in ps {
        let e = match args.n_cap {
            Some(cap) => sm_estimate_adaptive(a, spec, p, n_max, cap.max(n_max)),
            None => sm_estimate(a, spec, p, n_max),
        }
        .with_context(|| format!("sm_{p}"))?;
        status.inconclusive |= !e.stabilized;
        sr = Some(e.sum_rule_order);
        if p == NormP::Two {
            let (lo, hi) = sm_infty_interval(e.value, a.dim());
            header.push(format!("# sm_inf_interval_from_sm_2: [{}, {}]", fmt_f(lo), fmt_f(hi)));
        }
        rows.push(format!("{p},{},{},{},{},{}", fmt_f(e.value), fmt_f(e.rho.rho), e.stabilized, e.n_max, e.rho.truncated));
    }
    if let Some(o) = sr {
        header.insert(2, format!("# sum_rule_order: {o}"));
    }
    header.push("p,sm,rho,stabilized,n_max,truncated".to_string());
    emit(out, &header)?;
    emit(out, &rows)?;
    Ok(status)
}

/// Box of the level-n grid: m^n times the support of v∗φ, plus the support of u.
fn run_box(a: &MatrixFilter<Q>, m: i64, v: &MatrixFilter<Q>, u: &MatrixFilter<Q>, n: u32) -> Option<BoxRange> {
    let (ab, vb, ub) = (a.support()?, v.support()?, u.support()?);
    let s = m.pow(n);
    let lo = (0..a.dim()).map(|i| s * vb.lo[i] + (s * ab.lo[i]).div_euclid(m - 1) - ub.hi[i]).collect();
    let hi = (0..a.dim()).map(|i| s * vb.hi[i] + -(-s * ab.hi[i]).div_euclid(m - 1) - ub.lo[i]).collect();
    Some(BoxRange::new(lo, hi))
}

fn run(args: &RunArgs, out: &mut dyn Write) -> Result<Status> {
    let ld = load(&args.input.filter)?;
    let spec = ld.spec(&args.input)?;
    let a = ld.rational()?;
    let (d, r) = (a.dim(), a.rows());
    let mu = parse_mu(args.mu.as_deref(), d)?;
    let v = parse_data(&args.data, d, r)?;
    let u = parse_u(&args.u, a, &spec, &mu)?;
    let res = run_scheme(a, &spec, &v, &u, &mu, args.n).context("run")?;
    let grid = &res.grid;
    let bx = match run_box(a, spec.m, &v, &u, args.n) {
        Some(b) => b.hull(&grid.bx),
        None => grid.bx.clone(),
    };
    let mut lines = vec![
        "# vecsub run".to_string(),
        format!("# filter: {}", ld.name),
        format!("# dilation: {}", spec.m),
        format!("# level: {}", args.n),
        format!("# mu: {mu}"),
        format!("# beta: {}", format_q(&res.beta)),
        format!("# interpretation: {}", res.interpretation),
        format!("# samples: {}", bx.points().len()),
    ];
    let ks: Vec<String> = (1..=d).map(|i| format!("k{i}")).collect();
    let xs: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    lines.push(format!("{},{},value", ks.join(","), xs.join(",")));
    for k in bx.points() {
        let val = &grid.get(&k)[0];
        let vs = if args.exact { format_q(val) } else { format!("{}", vecsub::scalar::q_to_f64(val)) };
        let kt: Vec<String> = k.iter().map(|c| c.to_string()).collect();
        let xt: Vec<String> = grid.coords(&k).iter().map(|x| format!("{x}")).collect();
        lines.push(format!("{},{},{vs}", kt.join(","), xt.join(",")));
    }
    emit(out, &lines)?;
    Ok(Status::default())
}

fn oracle_components(spec_str: &str, d: usize) -> Result<Vec<SplineOracle>> {
    let parts: Vec<&str> = spec_str.split(':').collect();
    let order = |s: &str| s.parse::<u32>().map_err(|_| anyhow!(Error::parse(1, 1, format!("bad spline order `{s}`"))));
    match parts.as_slice() {
        ["bspline", k] => Ok(vec![SplineOracle::tensor(order(k)?, d)]),
        ["balanced", k, lat] => {
            let n = lattice_matrix(lat)?;
            Ok(balanced_oracles(order(k)?, &n, &gamma_set(&n)?))
        }
        _ => Err(anyhow!(Error::parse(1, 1, format!("bad oracle `{spec_str}` (bspline:K or balanced:K:LATTICE)")))),
    }
}

fn rate(args: &RateArgs, out: &mut dyn Write) -> Result<Status> {
    let ld = load(&args.input.filter)?;
    let spec = ld.spec(&args.input)?;
    let a = ld.rational()?;
    let (d, r) = (a.dim(), a.rows());
    let mu = parse_mu(args.mu.as_deref(), d)?;
    let v = parse_data(&args.data, d, r)?;
    let u = parse_u(&args.u, a, &spec, &mu)?;
    let comps = oracle_components(&args.oracle, d)?;
    if comps.len() != r || comps[0].d != d {
        bail!(Error::Incompatible(format!("oracle has {} components on R^{}, mask is {r}x{r} on Z^{d}", comps.len(), comps[0].d)));
    }
    let sr = sum_rule_order(a, &spec, DEFAULT_SUM_RULE_CAP).context("sum rules")?;
    let sm_inf = match args.sm_inf {
        Some(s) => s,
        None => sm_estimate(a, &spec, NormP::Inf, args.n_max.unwrap_or_else(|| default_n_max(d))).context("sm_inf")?.value,
    };
    let theory = RateTheory { drv: drv_index(&sr.jet, &u, &mu)?, sm_inf: Some(sm_inf), sum_rule_order: sr.order, mu_order: mu.order() };
    let vf = to_f64(&v);
    let vo = vf.clone();
    let m = spec.m;
    let mu_o = mu.clone();
    let oracle = move |n: u32| -> vecsub::Result<SampledGrid<f64>> {
        let g = oracle_grid(&comps, &mu_o, m, n, None)?;
        let comb = vo.upsample(m.pow(n)).convolve(g.as_filter())?;
        Ok(SampledGrid::from_filter(comb, n, m, None))
    };
    let rep = measure_rate(&to_f64(a), &spec, &vf, &to_f64(&u), &mu, &oracle, (args.n0, args.n1), Some(theory.clone()))
        .context("rate measurement")?;
    let mut lines = vec![
        "# vecsub rate".to_string(),
        format!("# filter: {}", ld.name),
        format!("# oracle: {}", args.oracle),
        format!("# mu: {mu}"),
        format!("# sum_rule_order: {}", sr.order),
        format!("# drv: {:?}", theory.drv),
        format!("# sm_inf: {}", fmt_f(sm_inf)),
        format!("# theory_S: {}", fmt_f(theory.s())),
        format!("# exponent: {}", fmt_f(rep.exponent)),
        format!("# monotone: {}", rep.monotone()),
        format!("# tags: {}", rep.tags.join("; ")),
    ];
    if let Some(e) = rep.epsilon {
        lines.push(format!("# epsilon: {}", fmt_f(e)));
    }
    lines.push("n,sup_error".to_string());
    for (n, e) in rep.levels.iter().zip(&rep.errors) {
        lines.push(format!("{n},{e:e}"));
    }
    emit(out, &lines)?;
    Ok(Status::default())
}

fn construct(kind: &ConstructKind, out: &mut dyn Write) -> Result<Status> {
    let (mask, mut meta) = match kind {
        ConstructKind::Bspline { order, dim } => {
            let b = bspline_filter(*order);
            let mut f = b.clone();
            for _ in 1..*dim {
                f = tensor_filter(&f, &b);
            }
            (f, vec![("name", format!("bspline{order}_d{dim}"))])
        }
        ConstructKind::ThreeDirection { m } => (three_direction_filter(*m), vec![("name", format!("u{m}"))]),
        ConstructKind::Balanced { filter, lattice } => {
            let ld = load(filter)?;
            let a = ld.rational()?;
            let b = balanced_from_scalar(a, &lattice_matrix(lattice)?).context("balanced construction")?;
            (b, vec![("name", format!("balanced_{}_{lattice}", ld.name)), ("lattice", lattice.clone())])
        }
        ConstructKind::Fixture { name } => {
            let ld = load(&format!("fixture:{name}"))?;
            let mut meta = vec![("name", name.clone())];
            for key in ["symmetry", "centres"] {
                if let Some(v) = ld.meta.get(key) {
                    meta.push((key, v.clone()));
                }
            }
            (ld.rational()?.clone(), meta)
        }
    };
    meta.push(("dilation", "2".to_string()));
    write!(out, "{}", write_filter(&mask, &meta))?;
    Ok(Status::default())
}

fn symmetry(args: &SymmetryArgs, out: &mut dyn Write) -> Result<Status> {
    let ld = load(&args.input.filter)?;
    let spec = ld.spec(&args.input)?;
    let a = ld.rational()?;
    let g = args
        .group
        .clone()
        .or_else(|| ld.meta.get("symmetry").cloned())
        .ok_or_else(|| Error::parse(1, 1, "no group given and the filter has no `symmetry` meta"))?;
    let grp = builtin_group(&g).ok_or_else(|| Error::parse(1, 1, format!("unknown group `{g}`")))?;
    let centres = match args.centres.as_ref().or(ld.meta.get("centres")) {
        Some(c) => parse_centres(c, a.dim())?,
        None => vec![vec![Q::zero(); a.dim()]; a.rows()],
    };
    let mut sym = SymmetrySpec::new(grp, centres.clone());
    sym.search_mixing = args.search_mixing;
    let res = check_symmetry(a, &spec, &sym).context("symmetry check")?;
    let mut lines = vec![
        "# vecsub check-symmetry".to_string(),
        format!("# filter: {}", ld.name),
        format!("# group: {g}"),
        format!("# centres: {}", format_centres(&centres)),
        format!("holds,{}", res.holds),
    ];
    if let Some(w) = res.witness {
        let pt: Vec<String> = w.point.iter().map(|c| c.to_string()).collect();
        lines.push(format!("witness_element,{:?}", w.element));
        lines.push(format!("witness_point,({})", pt.join(",")));
        lines.push(format!("witness_block,{},{}", w.block.0 + 1, w.block.1 + 1));
    }
    lines.push(format!("mixing_elements,{}", res.mixing_found.len()));
    emit(out, &lines)?;
    Ok(Status::default())
}

fn transform(args: &TransformArgs, out: &mut dyn Write) -> Result<Status> {
    let ld = load(&args.input.filter)?;
    let spec = ld.spec(&args.input)?;
    let a = ld.rational()?;
    let strong = match (&args.u, args.reduce) {
        (Some(path), _) => {
            let u = load(path)?.rational()?.clone();
            if u.dim() != a.dim() || u.rows() != a.rows() || u.cols() != a.rows() {
                bail!(Error::DimensionMismatch(format!("U must be {0}x{0} on Z^{1}", a.rows(), a.dim())));
            }
            verify_strong(&u)?.ok_or_else(|| Error::Precondition("U is not strongly invertible: its determinant is not a monomial".into()))?
        }
        (None, Some(m)) => {
            let vj = matching_jet(a, &spec, m).context("matching jet")?;
            column_reduce_matching(&vj, m).context("column reduction")?
        }
        (None, None) => bail!(Error::parse(1, 1, "transform needs --u FILE or --reduce M")),
    };
    let t = transform_filter(a, &spec, &strong).context("transform")?;
    let shift: Vec<String> = strong.det_shift.iter().map(|c| c.to_string()).collect();
    writeln!(out, "# det U = {} z^({})", format_q(&strong.det_coeff), shift.join(","))?;
    write!(out, "{}", write_filter(&t, &[("name", format!("{}_transformed", ld.name)), ("dilation", spec.m.to_string())]))?;
    if args.reduce.is_some() {
        write!(out, "{}", write_filter(&strong.u, &[("name", "U".to_string())]))?;
    }
    Ok(Status::default())
}

fn oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<Status> {
    let comps = match &args.lattice {
        Some(l) => {
            let n = lattice_matrix(l)?;
            balanced_oracles(args.order, &n, &gamma_set(&n)?)
        }
        None => vec![SplineOracle::tensor(args.order, args.dim)],
    };
    let d = comps[0].d;
    let mu = parse_mu(args.mu.as_deref(), d)?;
    let g = oracle_grid(&comps, &mu, args.dilation, args.level, None).context("oracle grid")?;
    let mut lines = vec![
        "# vecsub oracle".to_string(),
        format!("# order: {}", args.order),
        format!("# level: {}", args.level),
        format!("# mu: {mu}"),
        format!("# samples: {}", g.bx.points().len()),
    ];
    let ks: Vec<String> = (1..=d).map(|i| format!("k{i}")).collect();
    let xs: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let ps: Vec<String> = (1..=comps.len()).map(|i| format!("phi{i}")).collect();
    lines.push(format!("{},{},{}", ks.join(","), xs.join(","), ps.join(",")));
    for k in g.bx.points() {
        let kt: Vec<String> = k.iter().map(|c| c.to_string()).collect();
        let xt: Vec<String> = g.coords(&k).iter().map(|x| format!("{x}")).collect();
        let vt: Vec<String> = g.get(&k).iter().map(|x| format!("{x}")).collect();
        lines.push(format!("{},{},{}", kt.join(","), xt.join(","), vt.join(",")));
    }
    emit(out, &lines)?;
    Ok(Status::default())
}
