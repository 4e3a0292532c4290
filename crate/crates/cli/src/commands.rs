use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use twisted_core::campaign::{
    random_complex, random_degree_one, random_matrix, random_section, sample, sample_triples, TrialRng,
};
use twisted_core::polyfactor::{expand_factors, local_action, mu_matrix, refactor, sorted_roots};
use twisted_core::rmatrix::{check_inverse, check_twisted_ybr, make_trivial_flip, make_trivial_keep};
use twisted_core::theta::factor::chain_product_residual;
use twisted_core::theta::interp::sampled_product_residual;
use twisted_core::theta::space::constraint_dimension;
use twisted_core::theta::zeros::sum_rule_residual;
use twisted_core::theta::{det_zeros, mu_theta, multiply, theta_local_action, theta_refactor_with_c};
use twisted_core::transpositions::{
    check_functional_equations, check_relations, functional_residuals, make_algebra_map, make_scalar_rational,
    make_shift_twist, relation_residuals, Triple,
};
use twisted_core::{
    BraidWord, Carrier, Error, Factorization, Lattice, MatrixPolynomial, SpectrumPartition, ThetaFactor, TwistedMap,
    C64,
};

use crate::config::{Command, Config, MapKind, RKind};
use crate::Failure;

type Outcome = Result<bool, Failure>;

pub fn run(command: &Command, mut config: Config) -> Outcome {
    match command {
        Command::VerifyMap { map } => verify_map(&config, *map),
        Command::FactorPoly { partition } => {
            if let Some(p) = partition {
                config.extra.insert("partition".into(), json!(p));
            }
            factor_poly(&mut config, partition.as_deref())
        }
        Command::BraidOrbit {
            word,
            braid_check,
            theta,
        } => {
            config.extra.insert("word".into(), json!(word));
            if let Some(i) = braid_check {
                config.extra.insert("braid_check".into(), json!(i));
            }
            config.extra.insert("theta".into(), json!(theta));
            braid_orbit(&mut config, word, *braid_check, *theta)
        }
        Command::ThetaDiag { c_re, c_im } => {
            config.extra.insert("c".into(), json!([c_re, c_im]));
            theta_diag(&config, C64::new(*c_re, *c_im))
        }
        Command::VerifyRmatrix { map, rmatrix, perturb } => {
            config.extra.insert("rmatrix".into(), json!(rmatrix));
            config.extra.insert("perturb".into(), json!(perturb));
            verify_rmatrix(&config, *map, *rmatrix, *perturb)
        }
    }
}

fn emit(config: &Config, pass: bool, mut body: serde_json::Map<String, Value>) -> Outcome {
    body.insert(
        "config".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    body.insert("pass".into(), json!(pass));
    let mut text = serde_json::to_string_pretty(&Value::Object(body)).expect("report serializes");
    text.push('\n');
    match &config.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?
        }
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    eprintln!("{}: {}", config.command, if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn body(pairs: Vec<(&str, Value)>) -> serde_json::Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("value serializes")
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Config(format!("malformed JSON in {what}: {e}")))
}

fn lattice(config: &Config) -> Result<Lattice, Failure> {
    Ok(Lattice::new(C64::new(config.tau[0], config.tau[1]))?)
}

fn check_size(config: &Config, name: &str, value: usize, limit: usize) -> Result<(), Failure> {
    if value > limit && !config.allow_large {
        return Err(Failure::Config(format!(
            "input has {name}={value}, above the desk-scale limit {limit}; pass --allow-large to override"
        )));
    }
    Ok(())
}

/// Triples for a campaign. Cheap maps are screened so that every kept triple
/// lies in the map's domain; theta triples are kept as drawn and any domain
/// failures show up as rejections in the report.
fn triples<T, D>(config: &Config, map: &TwistedMap<T>, screen: bool, draw: D) -> Result<Vec<Triple<T>>, Failure>
where
    T: Carrier,
    D: Fn(&mut TrialRng) -> twisted_core::Result<T> + Sync,
{
    let accept =
        |t: &Triple<T>| !screen || (relation_residuals(map, t).is_ok() && functional_residuals(map, t).is_ok());
    Ok(sample_triples(config.seed, config.trials, draw, accept)?)
}

fn relations_report<T, D>(config: &Config, map: &TwistedMap<T>, screen: bool, draw: D) -> Outcome
where
    T: Carrier,
    D: Fn(&mut TrialRng) -> twisted_core::Result<T> + Sync,
{
    let ts = triples(config, map, screen, draw)?;
    let relations = check_relations(map, &ts, config.tol).with_seed(config.seed);
    let functional = check_functional_equations(map, &ts, config.tol).with_seed(config.seed);
    let pass = relations.pass && functional.pass;
    emit(
        config,
        pass,
        body(vec![
            ("relations", to_value(&relations)),
            ("functional", to_value(&functional)),
        ]),
    )
}

fn verify_map(config: &Config, kind: MapKind) -> Outcome {
    let m = config.m;
    match kind {
        MapKind::Qtwist => relations_report(config, &make_shift_twist(), true, |rng| Ok(random_complex(rng, 2.0))),
        MapKind::Scalar => relations_report(config, &make_scalar_rational(), true, |rng| {
            Ok(random_complex(rng, 2.0))
        }),
        MapKind::Algebra => relations_report(config, &make_algebra_map(m), true, |rng| Ok(random_matrix(rng, m))),
        MapKind::MatrixSwap => relations_report(config, &mu_matrix(m), true, |rng| Ok(random_matrix(rng, m))),
        MapKind::Theta => {
            let l = lattice(config)?;
            relations_report(config, &mu_theta(m, l), false, |rng| random_degree_one(rng, m, &l))
        }
    }
}

fn rmatrix_report<T, D>(
    config: &Config,
    map: &TwistedMap<T>,
    kind: RKind,
    perturb: f64,
    screen: bool,
    draw: D,
) -> Outcome
where
    T: Carrier,
    D: Fn(&mut TrialRng) -> twisted_core::Result<T> + Sync,
{
    let r = match kind {
        RKind::Keep => make_trivial_keep::<T>(config.n),
        RKind::Flip => make_trivial_flip::<T>(config.n),
    };
    let r = if perturb != 0.0 { r.perturbed(perturb) } else { r };
    let ts = triples(config, map, screen, draw)?;
    let pairs: Vec<(T, T)> = ts.iter().map(|t| (t.0.clone(), t.1.clone())).collect();
    let inverse = check_inverse(&r, map, &pairs, config.tol).with_seed(config.seed);
    let ybr = check_twisted_ybr(&r, map, &ts, config.tol).with_seed(config.seed);
    let pass = inverse.pass && ybr.pass;
    emit(
        config,
        pass,
        body(vec![("inverse", to_value(&inverse)), ("twisted_ybr", to_value(&ybr))]),
    )
}

fn verify_rmatrix(config: &Config, kind: MapKind, r: RKind, perturb: f64) -> Outcome {
    if !perturb.is_finite() {
        return Err(Failure::Config("--perturb must be finite".into()));
    }
    let m = config.m;
    match kind {
        MapKind::Qtwist => rmatrix_report(config, &make_shift_twist(), r, perturb, true, |rng| {
            Ok(random_complex(rng, 2.0))
        }),
        MapKind::Scalar => rmatrix_report(config, &make_scalar_rational(), r, perturb, true, |rng| {
            Ok(random_complex(rng, 2.0))
        }),
        MapKind::Algebra => rmatrix_report(config, &make_algebra_map(m), r, perturb, true, |rng| {
            Ok(random_matrix(rng, m))
        }),
        MapKind::MatrixSwap => rmatrix_report(config, &mu_matrix(m), r, perturb, true, |rng| Ok(random_matrix(rng, m))),
        MapKind::Theta => {
            let l = lattice(config)?;
            rmatrix_report(config, &mu_theta(m, l), r, perturb, false, |rng| {
                random_degree_one(rng, m, &l)
            })
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PartitionInput {
    Wrapped(SpectrumPartition),
    Bare(Vec<Vec<[f64; 2]>>),
}

fn parse_partition(arg: &str) -> Result<SpectrumPartition, Failure> {
    let trimmed = arg.trim_start();
    let parsed: PartitionInput = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        parse_json(arg, "--partition")?
    } else {
        read_json(Path::new(arg))?
    };
    let blocks = match parsed {
        PartitionInput::Wrapped(p) => p.blocks().to_vec(),
        PartitionInput::Bare(b) => b
            .into_iter()
            .map(|block| block.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect(),
    };
    Ok(SpectrumPartition::new(blocks)?)
}

fn min_separation(values: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

/// A seeded factorization with well-separated roots.
fn random_factorization(config: &Config, m: usize, d: usize) -> Result<Factorization, Failure> {
    let mut found = sample(
        config.seed,
        1,
        |rng| Factorization::new((0..d).map(|_| random_matrix(rng, m)).collect()),
        |f: &Factorization| min_separation(&f.strand_labels()) > 1e-2,
    )?;
    Ok(found.remove(0))
}

fn factor_poly(config: &mut Config, partition: Option<&str>) -> Outcome {
    let p: MatrixPolynomial = match &config.input {
        Some(path) => read_json(path)?,
        None => expand_factors(random_factorization(config, config.m, config.d)?.factors())?,
    };
    check_size(config, "m", p.m(), 4)?;
    check_size(config, "d", p.degree(), 4)?;
    config.m = p.m();
    config.d = p.degree();
    let partition = match partition {
        Some(arg) => parse_partition(arg)?,
        None => {
            let roots = sorted_roots(&p)?;
            SpectrumPartition::new(roots.chunks(p.m().max(1)).map(<[C64]>::to_vec).collect())?
        }
    };
    let f = refactor(&p, &partition)?;
    let residual = expand_factors(f.factors())?.distance(&p) / (1.0 + p.max_coeff_norm());
    let pass = residual <= config.tol;
    emit(
        config,
        pass,
        body(vec![
            ("polynomial", to_value(&p)),
            ("partition", to_value(&partition)),
            ("factorization", to_value(&f)),
            ("residual", json!(residual)),
        ]),
    )
}

fn parse_word(word: &str) -> Result<Vec<usize>, Failure> {
    word.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Failure::Config(format!("bad letter {s:?} in --word")))
        })
        .collect()
}

fn braid_pair(strands: usize, i: usize) -> Result<(BraidWord, BraidWord), Failure> {
    if i == 0 || i + 1 >= strands {
        return Err(Failure::Config(format!(
            "--braid-check needs 1 <= i <= {} for {strands} strands",
            strands.saturating_sub(2)
        )));
    }
    Ok((
        BraidWord::new(strands, vec![i, i + 1, i])?,
        BraidWord::new(strands, vec![i + 1, i, i + 1])?,
    ))
}

fn braid_orbit(config: &mut Config, word: &str, braid_check: Option<usize>, theta: bool) -> Outcome {
    let letters = parse_word(word)?;
    if theta {
        return theta_orbit(config, letters, braid_check);
    }
    let f: Factorization = match &config.input {
        Some(path) => read_json(path)?,
        None => random_factorization(config, config.m, config.big_n)?,
    };
    check_size(config, "m", f.m(), 4)?;
    check_size(config, "N", f.d(), 4)?;
    config.m = f.m();
    config.big_n = f.d();
    let strands = f.m() * f.d();
    let scale = f.factors().iter().map(|b| b.frobenius_norm()).fold(1.0, f64::max);
    if let Some(i) = braid_check {
        let (a, b) = braid_pair(strands, i)?;
        let (fa, fb) = (local_action(&a, &f)?, local_action(&b, &f)?);
        let gap = fa.distance(&fb) / scale;
        let pass = gap <= config.tol;
        return emit(
            config,
            pass,
            body(vec![
                ("input", to_value(&f)),
                ("word_a", to_value(&a)),
                ("word_b", to_value(&b)),
                ("result_a", to_value(&fa)),
                ("result_b", to_value(&fb)),
                ("gap", json!(gap)),
            ]),
        );
    }
    let w = BraidWord::new(strands, letters)?;
    let g = local_action(&w, &f)?;
    let p = expand_factors(f.factors())?;
    let residual = expand_factors(g.factors())?.distance(&p) / (1.0 + p.max_coeff_norm());
    let pass = residual <= config.tol;
    emit(
        config,
        pass,
        body(vec![
            ("input", to_value(&f)),
            ("word", to_value(&w)),
            ("result", to_value(&g)),
            ("product_residual", json!(residual)),
        ]),
    )
}

fn chain_gap(l: &Lattice, a: &[ThetaFactor], b: &[ThetaFactor]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let m = x.section.m();
            let labels = x
                .zeros
                .iter()
                .zip(&y.zeros)
                .map(|(&z, &w)| l.periodic_distance(z, w, m))
                .fold(0.0, f64::max);
            x.section.ray_distance(&y.section).max(labels)
        })
        .fold(0.0, f64::max)
}

fn theta_orbit(config: &mut Config, letters: Vec<usize>, braid_check: Option<usize>) -> Outcome {
    let chain: Vec<ThetaFactor> = match &config.input {
        Some(path) => {
            let raw: Vec<ThetaFactor> = read_json(path)?;
            raw.into_iter()
                .map(|f| ThetaFactor::with_order(f.section, f.zeros))
                .collect::<twisted_core::Result<_>>()?
        }
        None => {
            let (m, n) = (config.m, config.big_n);
            let l = lattice(config)?;
            let sections = sample(config.seed, n, |rng| random_degree_one(rng, m, &l), |_| true)?;
            sections
                .into_iter()
                .map(ThetaFactor::new)
                .collect::<twisted_core::Result<_>>()?
        }
    };
    let first = chain
        .first()
        .ok_or_else(|| Failure::Config("empty theta chain".into()))?;
    let l = *first.section.lattice();
    let m = first.section.m();
    check_size(config, "m", m, 4)?;
    check_size(config, "N", chain.len(), 4)?;
    config.m = m;
    config.big_n = chain.len();
    config.tau = [l.tau().re, l.tau().im];
    let strands = m * chain.len();
    if let Some(i) = braid_check {
        let (a, b) = braid_pair(strands, i)?;
        let (ca, cb) = (theta_local_action(&a, &chain)?, theta_local_action(&b, &chain)?);
        let gap = chain_gap(&l, &ca, &cb);
        let pass = gap <= config.tol;
        return emit(
            config,
            pass,
            body(vec![
                ("input", to_value(&chain)),
                ("word_a", to_value(&a)),
                ("word_b", to_value(&b)),
                ("result_a", to_value(&ca)),
                ("result_b", to_value(&cb)),
                ("gap", json!(gap)),
            ]),
        );
    }
    let w = BraidWord::new(strands, letters)?;
    let out = theta_local_action(&w, &chain)?;
    let residual = chain_product_residual(&chain, &out);
    let pass = residual <= config.tol;
    emit(
        config,
        pass,
        body(vec![
            ("input", to_value(&chain)),
            ("word", to_value(&w)),
            ("result", to_value(&out)),
            ("product_residual", json!(residual)),
        ]),
    )
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: Value,
    expected: Value,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Check {
    fn exact(name: &str, found: usize, expected: usize) -> Self {
        Check {
            name: name.into(),
            value: json!(found),
            expected: json!(expected),
            pass: found == expected,
            error: None,
        }
    }

    fn below(name: &str, value: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value: json!(value),
            expected: json!(format!("<= {tol:e}")),
            pass: value <= tol,
            error: None,
        }
    }

    fn failed(name: &str, e: &Error) -> Self {
        Check {
            name: name.into(),
            value: Value::Null,
            expected: Value::Null,
            pass: false,
            error: Some(format!("{}: {e}", e.name())),
        }
    }
}

fn theta_diag(config: &Config, c: C64) -> Outcome {
    let l = lattice(config)?;
    let (m, n, tol) = (config.m, config.n, config.tol);
    let mut checks = Vec::new();

    checks.push(match constraint_dimension(n, m, c, &l) {
        Ok(dim) => Check::exact("dimension", dim, m * m * n),
        Err(e) => Check::failed("dimension", &e),
    });

    let sections = sample(
        config.seed,
        config.trials,
        |rng| random_section(rng, n, m, c, &l),
        |_| true,
    )?;
    for (k, f) in sections.iter().enumerate() {
        match det_zeros(f) {
            Ok(zs) => {
                checks.push(Check::exact(&format!("zero_count[{k}]"), zs.len(), m * n));
                checks.push(Check::below(&format!("sum_rule[{k}]"), sum_rule_residual(f, &zs), tol));
            }
            Err(Error::ZeroCountMismatch { found, .. }) => {
                checks.push(Check::exact(&format!("zero_count[{k}]"), found, m * n))
            }
            Err(e) => checks.push(Check::failed(&format!("zero_count[{k}]"), &e)),
        }
    }

    // multiply n random degree-one sections and split the product again
    let chains = sample(
        config.seed,
        config.trials,
        |rng| {
            (0..n)
                .map(|_| random_degree_one(rng, m, &l))
                .collect::<twisted_core::Result<Vec<_>>>()
        },
        |_| true,
    )?;
    for (k, parts) in chains.iter().enumerate() {
        let name = format!("round_trip[{k}]");
        match round_trip(&l, m, parts) {
            Ok(gap) => checks.push(Check::below(&name, gap, tol)),
            Err(e) => checks.push(Check::failed(&name, &e)),
        }
    }

    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("failed checks: {}", failed.join(", "));
    }
    let pass = failed.is_empty();
    emit(config, pass, body(vec![("checks", to_value(&checks))]))
}

/// Largest of the coefficient recovery gap and the held-out product residual.
fn round_trip(l: &Lattice, m: usize, parts: &[twisted_core::ThetaSection]) -> twisted_core::Result<f64> {
    let h = multiply(parts)?;
    let blocks = parts
        .iter()
        .map(|f| det_zeros(f).map(|z| z.points))
        .collect::<twisted_core::Result<Vec<_>>>()?;
    let hints: Vec<C64> = parts.iter().map(|f| f.c()).collect();
    let back = theta_refactor_with_c(&h, &SpectrumPartition::new(blocks)?, Some(&hints))?;
    let recovery = back
        .iter()
        .zip(parts)
        .map(|(a, b)| a.ray_distance(b))
        .fold(0.0, f64::max);
    Ok(recovery.max(sampled_product_residual(l, m, std::slice::from_ref(&h), &back)))
}
