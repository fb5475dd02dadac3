//! The command-line subcommands as library functions returning the output text.

use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Format, JobConfig};
use crate::error::{validation, Error, Result};
use crate::gamma::build_gamma_table;
use crate::geom::{factorization_check, invariance_check, moment_map_audit, TorusAction};
use crate::indexcore::{Basis, MultiIndex, Partition, Space};
use crate::oracle::gamma_from_oracle;
use crate::symbolexpr::SymbolSpec;
use crate::toeplitz::{assemble, commutation_suite, export_matrix, fusion_defect};

pub const VERSION: &str = env!("BT_VERSION");
/// Probes used by the domain pre-check of symbols with `log` or division.
pub const PRECHECK_PROBES: usize = 1000;
/// A formula/oracle row passes when `|diff| ≤ max(ORACLE_ABS_TOL, 3·stderr)`.
pub const ORACLE_ABS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Gamma,
    Operator,
    Commutator,
    Fusion,
    OracleCompare,
    Geometry,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gamma => "gamma",
            Command::Operator => "operator",
            Command::Commutator => "commutator",
            Command::Fusion => "fusion",
            Command::OracleCompare => "oracle-compare",
            Command::Geometry => "geometry",
        }
    }
}

struct Job {
    cfg: JobConfig,
    k: Partition,
    space: Space,
    symbols: Vec<SymbolSpec>,
}

impl Job {
    fn new(cfg: JobConfig) -> Result<Self> {
        cfg.quadrature.validate()?;
        let k = cfg.partition()?;
        let symbols = cfg.symbols(&k)?;
        let space = cfg.space.space();
        for (i, s) in symbols.iter().enumerate() {
            precheck(i, s, &k, &space)?;
        }
        Ok(Self { cfg, k, space, symbols })
    }

    fn basis(&self) -> Result<Arc<Basis>> {
        Ok(Arc::new(Basis::new(self.k.n(), self.space)?))
    }

    fn need_symbols(&self, min: usize) -> Result<()> {
        if self.symbols.len() < min {
            return Err(validation(format!("this command needs at least {min} symbol(s), got {}", self.symbols.len())));
        }
        Ok(())
    }
}

/// Runs a command and returns the file contents it produces.
pub fn run(cmd: Command, cfg: JobConfig) -> Result<String> {
    let job = Job::new(cfg)?;
    match cmd {
        Command::Gamma => cmd_gamma(&job),
        Command::Operator => cmd_operator(&job),
        Command::Commutator => cmd_commutator(&job),
        Command::Fusion => cmd_fusion(&job),
        Command::OracleCompare => cmd_oracle_compare(&job),
        Command::Geometry => cmd_geometry(&job),
    }
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let (mut f, mut x) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        x += f * (i % base) as f64;
        i /= base;
    }
    x
}

const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Evaluates symbols that use `log` or division on Halton probes of the domain.
fn precheck(i: usize, psi: &SymbolSpec, k: &Partition, space: &Space) -> Result<()> {
    if !psi.may_be_unbounded() {
        return Ok(());
    }
    let n = k.n();
    if 2 * n > PRIMES.len() {
        return Ok(());
    }
    let sym = psi.compile(k)?;
    let mut point = Vec::new();
    let mut rho = vec![0.0; n];
    let mut t = vec![Complex64::new(1.0, 0.0); n];
    for j in 1..=PRECHECK_PROBES {
        for u in 0..n {
            let h = radical_inverse(j, PRIMES[u]);
            rho[u] = match space {
                Space::Projective { .. } => (0.5 * std::f64::consts::PI * h).tan(),
                Space::Ball { .. } => h / (n as f64).sqrt(),
            };
            t[u] = Complex64::from_polar(1.0, std::f64::consts::TAU * radical_inverse(j, PRIMES[n + u]));
        }
        let v = sym.eval_polar(&rho, &t, &mut point).map_err(|e| {
            Error::Domain(format!("symbol {} failed the domain pre-check at |z| = {rho:?}: {e}", i + 1))
        })?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Domain(format!("symbol {} is not finite at |z| = {rho:?}", i + 1)));
        }
    }
    Ok(())
}

/// Shortest round-trip text; scientific outside `[1e-5, 1e16)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn provenance_lines(cmd: Command, job: &Job, extra: &[(&str, String)]) -> String {
    let mut s = format!("# bergman-toeplitz {VERSION}\n# command: {}\n# basis-order: graded-lex\n", cmd.name());
    for (k, v) in extra {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    s.push_str(&format!("# config: {}\n", job.cfg.canonical()));
    s
}

fn provenance_json(cmd: Command, job: &Job, extra: &[(&str, String)]) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("version".into(), json!(VERSION));
    m.insert("command".into(), json!(cmd.name()));
    m.insert("basis_order".into(), json!("graded-lex"));
    for (k, v) in extra {
        m.insert((*k).into(), json!(v));
    }
    m.insert("config".into(), serde_json::to_value(&job.cfg).expect("config serializes"));
    Value::Object(m)
}

/// CSV body (RFC 4180) or a JSON document, both carrying the provenance.
fn emit(cmd: Command, job: &Job, extra: &[(&str, String)], header: &[&str], rows: &[Vec<String>], data: Value) -> Result<String> {
    match job.cfg.output.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
            w.write_record(header).map_err(io)?;
            for r in rows {
                w.write_record(r).map_err(io)?;
            }
            let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
                .expect("csv output is utf-8");
            Ok(provenance_lines(cmd, job, extra) + &body)
        }
        Format::Json => {
            let doc = json!({ "provenance": provenance_json(cmd, job, extra), "data": data });
            Ok(serde_json::to_string_pretty(&doc).expect("json serializes") + "\n")
        }
    }
}

fn quad_text(job: &Job) -> String {
    serde_json::to_string(&job.cfg.quadrature).expect("spec serializes")
}

fn cmd_gamma(job: &Job) -> Result<String> {
    job.need_symbols(1)?;
    let mut rows = Vec::new();
    let mut data = Vec::new();
    let mut theorems = Vec::new();
    for (i, psi) in job.symbols.iter().enumerate() {
        let t = build_gamma_table(psi, &job.space, &job.k, &job.cfg.quadrature)?;
        theorems.push(t.theorem.to_string());
        let p = t.shift.entries();
        for (alpha, v) in &t.entries {
            let beta = alpha.shifted(p).filter(|_| v.is_some());
            let v = v.unwrap_or_default();
            rows.push(vec![
                (i + 1).to_string(),
                t.theorem.to_string(),
                alpha.to_string(),
                beta.as_ref().map(MultiIndex::to_string).unwrap_or_default(),
                num(v.re),
                num(v.im),
                beta.is_none().to_string(),
            ]);
            data.push(json!({
                "symbol": i + 1, "theorem": t.theorem.to_string(), "alpha": alpha.entries(),
                "beta": beta.as_ref().map(|b| b.entries().to_vec()), "re": v.re, "im": v.im,
                "hard_zero": beta.is_none(),
            }));
        }
    }
    let extra = [("theorem", theorems.join(",")), ("quadrature", quad_text(job))];
    emit(
        Command::Gamma,
        job,
        &extra,
        &["symbol", "theorem", "alpha", "beta", "re", "im", "hard_zero"],
        &rows,
        Value::Array(data),
    )
}

fn cmd_operator(job: &Job) -> Result<String> {
    if job.symbols.len() != 1 {
        return Err(validation(format!("operator needs exactly one symbol, got {}", job.symbols.len())));
    }
    let basis = job.basis()?;
    let table = build_gamma_table(&job.symbols[0], &job.space, &job.k, &job.cfg.quadrature)?;
    let normalized = job.cfg.output.normalized;
    let m = assemble(&table, &basis, normalized)?;
    let space = match job.space {
        Space::Projective { m } => format!("m={m}"),
        Space::Ball { lambda, cap } => format!("lambda={lambda} cap={cap}"),
    };
    let extra = [("theorem", table.theorem.to_string()), ("quadrature", quad_text(job))];
    match job.cfg.output.format {
        Format::Csv => {
            let s = provenance_lines(Command::Operator, job, &extra) + &export_matrix(&m);
            Ok(s)
        }
        Format::Json => {
            let entries: Vec<Value> = m.triplets().map(|(r, c, v)| json!([r, c, v.re, v.im])).collect();
            let data = json!({
                "n": basis.n(), "space": space, "dim": m.dim(), "shift": m.shift(),
                "normalized": normalized, "entries": entries,
            });
            emit(Command::Operator, job, &extra, &[], &[], data)
        }
    }
}

fn cmd_commutator(job: &Job) -> Result<String> {
    job.need_symbols(2)?;
    let basis = job.basis()?;
    let r = commutation_suite(&job.symbols, &basis, &job.k, &job.cfg.quadrature)?;
    let rows: Vec<Vec<String>> = r.pairs.iter().map(|&(i, j, x)| vec![(i + 1).to_string(), (j + 1).to_string(), num(x)]).collect();
    let extra = [("max-relative", num(r.max_relative)), ("quadrature", quad_text(job))];
    let data = json!({
        "max_relative": r.max_relative,
        "pairs": r.pairs.iter().map(|&(i, j, x)| json!({"i": i + 1, "j": j + 1, "relative": x})).collect::<Vec<_>>(),
    });
    emit(Command::Commutator, job, &extra, &["i", "j", "relative"], &rows, data)
}

fn cmd_fusion(job: &Job) -> Result<String> {
    job.need_symbols(2)?;
    let basis = job.basis()?;
    let r = fusion_defect(&job.symbols[0], &job.symbols[1..], &basis, &job.k, &job.cfg.quadrature)?;
    let rows = vec![vec![num(r.defect), num(r.scale), num(r.relative()), r.verdict.to_string()]];
    let extra = [("quadrature", quad_text(job))];
    let data = json!({ "defect": r.defect, "scale": r.scale, "relative": r.relative(), "verdict": r.verdict });
    emit(Command::Fusion, job, &extra, &["defect", "scale", "relative", "verdict"], &rows, data)
}

fn cmd_oracle_compare(job: &Job) -> Result<String> {
    job.need_symbols(1)?;
    let basis = job.basis()?;
    let alphas = match job.cfg.oracle_alphas()? {
        Some(a) => {
            if let Some(bad) = a.iter().find(|x| basis.position(x).is_none()) {
                return Err(validation(format!("oracle alpha {bad} is not in the basis")));
            }
            a
        }
        None => basis.indices().to_vec(),
    };
    let method = job.cfg.oracle.method;
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for (i, psi) in job.symbols.iter().enumerate() {
        let table = build_gamma_table(psi, &job.space, &job.k, &job.cfg.quadrature)?;
        let oracle = gamma_from_oracle(psi, &job.k, &job.space, &alphas, &method)?;
        for (alpha, o) in alphas.iter().zip(oracle) {
            let Some(o) = o else { continue };
            let f = table.get(alpha).unwrap_or_default();
            let diff = (f - o.value).norm();
            let ok = diff <= ORACLE_ABS_TOL.max(3.0 * o.stderr);
            rows.push(vec![
                (i + 1).to_string(),
                alpha.to_string(),
                num(f.re),
                num(f.im),
                num(o.value.re),
                num(o.value.im),
                num(diff),
                num(o.stderr),
                ok.to_string(),
            ]);
            data.push(json!({
                "symbol": i + 1, "alpha": alpha.entries(), "formula": [f.re, f.im],
                "oracle": [o.value.re, o.value.im], "abs_diff": diff, "stderr": o.stderr, "within_tolerance": ok,
            }));
        }
    }
    let extra = [
        ("oracle", serde_json::to_string(&method).expect("method serializes")),
        ("quadrature", quad_text(job)),
    ];
    emit(
        Command::OracleCompare,
        job,
        &extra,
        &["symbol", "alpha", "formula_re", "formula_im", "oracle_re", "oracle_im", "abs_diff", "stderr", "within_tolerance"],
        &rows,
        Value::Array(data),
    )
}

fn cmd_geometry(job: &Job) -> Result<String> {
    let g = &job.cfg.geometry;
    let mut rows = vec![vec!["-".to_string(), "moment-map".to_string(), num(moment_map_audit(&job.k, g.trials, g.seed)?)]];
    for (i, psi) in job.symbols.iter().enumerate() {
        for &action in &g.actions {
            let name = match action {
                TorusAction::FullTorus => "full-torus",
                TorusAction::PartitionTorus => "partition-torus",
            };
            let d = invariance_check(psi, &job.k, action, g.trials, g.seed)?;
            rows.push(vec![(i + 1).to_string(), name.to_string(), num(d)]);
        }
        if matches!(psi, SymbolSpec::QuasiRadial { .. }) {
            let d = factorization_check(psi, &job.k, g.trials, g.seed)?;
            rows.push(vec![(i + 1).to_string(), "factorization".to_string(), num(d)]);
        }
    }
    let data: Vec<Value> = rows.iter().map(|r| json!({"symbol": r[0], "check": r[1], "deviation": r[2].parse::<f64>().ok()})).collect();
    emit(Command::Geometry, job, &[], &["symbol", "check", "deviation"], &rows, Value::Array(data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> JobConfig {
        JobConfig::from_json(text).unwrap()
    }

    #[test]
    fn halton_points() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn unit_gamma_rows() {
        let c = cfg(r#"{"space": {"kind": "projective", "n": 2, "m": 2}, "partition": [2],
            "symbols": [{"kind": "quasi-radial", "a": "1"}]}"#);
        let out = run(Command::Gamma, c).unwrap();
        let body: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 7);
        for l in &body[1..] {
            let f: Vec<&str> = l.rsplitn(4, ',').collect();
            assert!((f[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-14, "{l}");
            assert_eq!((f[1], f[0]), ("0", "false"));
        }
    }

    #[test]
    fn invalid_shift_exit_code() {
        let c = cfg(r#"{"space": {"kind": "projective", "n": 2, "m": 2}, "partition": [2],
            "symbols": [{"kind": "multi-sphere", "block": 1, "p": [1, 0]}]}"#);
        let e = run(Command::Gamma, c).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("symbol 1") && e.to_string().contains("sum is 1"), "{e}");
    }

    #[test]
    fn precheck_rejects_log_zero() {
        let c = cfg(r#"{"space": {"kind": "projective", "n": 1, "m": 2}, "partition": [1],
            "symbols": [{"kind": "quasi-radial", "a": "log(r1 - r1)"}]}"#);
        let e = run(Command::Gamma, c).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn operator_header() {
        let c = cfg(r#"{"space": {"kind": "projective", "n": 2, "m": 2}, "partition": [2],
            "symbols": [{"kind": "phase", "p": [1, -1]}]}"#);
        let out = run(Command::Operator, c).unwrap();
        assert!(out.contains("# n=2 m=2 dim=6 shift=(1,-1) order=graded-lex normalized=true\n"));
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 3);
    }
}
