//! Convergence studies, verification runs and CSV records.
//!
//! Configuration is flat `key = value` text (`#` starts a comment). Keys:
//!
//! | key                | values                                   | default            |
//! |--------------------|------------------------------------------|--------------------|
//! | `mesh`             | `crisscross`, `diagonal`, `file`         | `crisscross`       |
//! | `mesh-file`        | path (with `mesh = file`)                |                    |
//! | `domain`           | `x0,y0,x1,y1`                            | `0,0,1,1`          |
//! | `mesh-n`           | strictly increasing list of `n`          | `4,8,16,32`        |
//! | `t`                | list of thicknesses in `(0, 1)`          | `0.1,0.01,1e-4`    |
//! | `kind`             | `std`, `dual`, `both`                    | `both`             |
//! | `path`             | `full`, `condensed`, `both`              | `full`             |
//! | `mms`              | `default`, `none`                        | `default`          |
//! | `young`, `poisson`, `shear-correction` | material             | `1`, `0.3`, `5/6`  |
//! | `out`              | CSV path                                 | none               |
//! | `workers`          | thread count, `0` for all cores          | `0`                |
//! | `beta-max-n`       | largest `n` for the dense `β_h` column   | `16`               |
//!
//! With `mesh = file`, `mesh-n` lists uniform refinement levels of the
//! file mesh (`0` is the mesh itself).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{assemble, Loads, Material};
use crate::diagnostics::{
    biorthogonality_defect, continuity_defect, diagonal_dominance, fortin_diagnostics, infsup_estimate,
    partition_of_unity_defect, ClampedPair, PolynomialPair, SkewPolynomialPair,
};
use crate::error::{Error, Result};
use crate::mesh::{generate_crisscross, generate_uniform_diagonal, validate_interior_vertex_assumption, Mesh, Rect};
use crate::mms::{apply_mms_loads, DefaultCase};
use crate::norms::{error_norms_against, reference_error_norms, DiscreteFields, ErrorNorms};
use crate::reference::reference_biorthogonality_check;
use crate::solver::{solve, PlateSolution, SolvePath};
use crate::spaces::{discretize, eoc, multiplier_approximation_study, DofLayout, MultiplierBasis, MultiplierKind, Weighting};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshFamily {
    Crisscross,
    Diagonal,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadCase {
    /// The default manufactured solution on the unit square.
    Manufactured,
    /// `g ≡ 1`, errors measured against the finest level.
    UniformLoad,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub mesh: MeshFamily,
    pub domain: Rect,
    pub levels: Vec<usize>,
    pub thicknesses: Vec<f64>,
    pub kinds: Vec<MultiplierKind>,
    pub paths: Vec<SolvePath>,
    pub material: Material,
    pub load: LoadCase,
    pub out: Option<PathBuf>,
    /// `0` uses every available core.
    pub workers: usize,
    pub beta_max_n: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            mesh: MeshFamily::Crisscross,
            domain: Rect::UNIT_SQUARE,
            levels: vec![4, 8, 16, 32],
            thicknesses: vec![0.1, 0.01, 1e-4],
            kinds: vec![MultiplierKind::Standard, MultiplierKind::Dual],
            paths: vec![SolvePath::Full],
            material: Material::default(),
            load: LoadCase::Manufactured,
            out: None,
            workers: 0,
            beta_max_n: 16,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "mesh",
    "mesh-file",
    "domain",
    "mesh-n",
    "t",
    "kind",
    "path",
    "mms",
    "young",
    "poisson",
    "shear-correction",
    "out",
    "workers",
    "beta-max-n",
];

/// Parses `key = value` lines. Later keys override earlier ones.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1)))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse {s:?}"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl StudyConfig {
    /// Builds a configuration from parsed keys; missing keys keep their
    /// defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key {k:?}")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        if let Some(v) = get("mesh") {
            cfg.mesh = match v {
                "crisscross" => MeshFamily::Crisscross,
                "diagonal" | "uniform-diagonal" => MeshFamily::Diagonal,
                "file" => {
                    let path = get("mesh-file").ok_or_else(|| Error::Config("mesh = file needs mesh-file".into()))?;
                    MeshFamily::File(PathBuf::from(path))
                }
                other => return Err(Error::Config(format!("mesh: unknown family {other:?}"))),
            };
        } else if let Some(path) = get("mesh-file") {
            cfg.mesh = MeshFamily::File(PathBuf::from(path));
        }
        if let Some(v) = get("domain") {
            let c: Vec<f64> = parse_list("domain", v)?;
            if c.len() != 4 {
                return Err(Error::Config(format!("domain: expected x0,y0,x1,y1, got {v:?}")));
            }
            cfg.domain = Rect::new(c[0], c[1], c[2], c[3])?;
        }
        if let Some(v) = get("mesh-n") {
            cfg.levels = parse_list("mesh-n", v)?;
        }
        if let Some(v) = get("t") {
            cfg.thicknesses = parse_list("t", v)?;
        }
        if let Some(v) = get("kind") {
            cfg.kinds = match v {
                "both" => vec![MultiplierKind::Standard, MultiplierKind::Dual],
                s => vec![MultiplierKind::parse(s).ok_or_else(|| Error::Config(format!("kind: unknown {s:?}")))?],
            };
        }
        if let Some(v) = get("path") {
            cfg.paths = match v {
                "both" => vec![SolvePath::Full, SolvePath::Condensed],
                s => vec![SolvePath::parse(s).ok_or_else(|| Error::Config(format!("path: unknown {s:?}")))?],
            };
        }
        if let Some(v) = get("mms") {
            cfg.load = match v {
                "default" => LoadCase::Manufactured,
                "none" => LoadCase::UniformLoad,
                s => return Err(Error::Config(format!("mms: unknown {s:?}"))),
            };
        }
        let young = get("young").map(|v| parse_one("young", v)).transpose()?.unwrap_or(cfg.material.young);
        let poisson = get("poisson").map(|v| parse_one("poisson", v)).transpose()?.unwrap_or(cfg.material.poisson);
        let k = get("shear-correction")
            .map(|v| parse_one("shear-correction", v))
            .transpose()?
            .unwrap_or(cfg.material.shear_correction);
        cfg.material = Material::new(young, poisson, k)?;
        if let Some(v) = get("out") {
            cfg.out = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        if let Some(v) = get("workers") {
            cfg.workers = parse_one("workers", v)?;
        }
        if let Some(v) = get("beta-max-n") {
            cfg.beta_max_n = parse_one("beta-max-n", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_map(&parse_config_text(text)?)
    }

    /// Reads a config file, applies `overrides` on top, and resolves a
    /// relative `mesh-file` against the config file's directory.
    pub fn load(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Self> {
        let path = path.as_ref();
        let mut map = parse_config_text(&std::fs::read_to_string(path)?)?;
        for (k, v) in overrides {
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key {k:?}")));
            }
            map.insert(k.clone(), v.clone());
        }
        let mut cfg = Self::from_map(&map)?;
        if let MeshFamily::File(p) = &mut cfg.mesh {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("mesh-n: at least one level required".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("mesh-n: levels must be strictly increasing, got {:?}", self.levels)));
        }
        if !matches!(self.mesh, MeshFamily::File(_)) && self.levels[0] == 0 {
            return Err(Error::Config("mesh-n: cell counts must be positive".into()));
        }
        if self.thicknesses.is_empty() {
            return Err(Error::Config("t: at least one thickness required".into()));
        }
        if let Some(t) = self.thicknesses.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::Config(format!("t: {t} is outside (0, 1)")));
        }
        let mut sorted = self.thicknesses.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("t: duplicate thickness".into()));
        }
        if self.kinds.is_empty() || self.paths.is_empty() {
            return Err(Error::Config("kind and path must be non-empty".into()));
        }
        if self.load == LoadCase::Manufactured && !matches!(self.mesh, MeshFamily::File(_)) && self.domain != Rect::UNIT_SQUARE {
            return Err(Error::Config("the manufactured solution is defined on the unit square only".into()));
        }
        Ok(())
    }

    /// One mesh per level, or the reason it could not be built.
    pub fn meshes(&self) -> Vec<(usize, Result<Mesh>)> {
        let base = match &self.mesh {
            MeshFamily::File(p) => Some(Mesh::read(p)),
            _ => None,
        };
        self.levels
            .iter()
            .map(|&n| {
                let mesh = match (&self.mesh, &base) {
                    (MeshFamily::Crisscross, _) => generate_crisscross(n, &self.domain),
                    (MeshFamily::Diagonal, _) => generate_uniform_diagonal(n, &self.domain),
                    (MeshFamily::File(_), Some(Ok(m))) => Ok((0..n).fold(m.clone(), |m, _| m.refine_uniform())),
                    (MeshFamily::File(p), _) => Err(Error::InvalidMesh(format!("cannot read {}", p.display()))),
                };
                (n, mesh)
            })
            .collect()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("workers: {e}")))
    }
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub kind: MultiplierKind,
    pub t: f64,
    pub n: usize,
    pub h: f64,
    pub err_phi_h1: f64,
    pub err_u_h1: f64,
    pub err_zeta_l2: f64,
    pub err_zeta_tl2: f64,
    pub eoc_phi: Option<f64>,
    pub eoc_u: Option<f64>,
    pub eoc_zeta_tl2: Option<f64>,
    pub beta_h: Option<f64>,
    pub solve_path: SolvePath,
    /// Seconds spent assembling, solving and measuring this case.
    pub wall_time: f64,
}

pub const CSV_HEADER: [&str; 14] = [
    "kind",
    "t",
    "n",
    "h",
    "err_phi_H1",
    "err_u_H1",
    "err_zeta_L2",
    "err_zeta_tL2",
    "eoc_phi",
    "eoc_u",
    "eoc_zeta_tL2",
    "beta_h",
    "solve_path",
    "wall_time",
];

/// `%.17g`: seventeen significant digits, exponent form below `1e-4` and
/// from `1e17` up, trailing zeros dropped. Round-trips every finite `f64`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl ConvergenceRecord {
    fn to_fields(&self) -> [String; 14] {
        [
            self.kind.label().to_string(),
            format_float(self.t),
            self.n.to_string(),
            format_float(self.h),
            format_float(self.err_phi_h1),
            format_float(self.err_u_h1),
            format_float(self.err_zeta_l2),
            format_float(self.err_zeta_tl2),
            format_opt(self.eoc_phi),
            format_opt(self.eoc_u),
            format_opt(self.eoc_zeta_tl2),
            format_opt(self.beta_h),
            self.solve_path.label().to_string(),
            format_float(self.wall_time),
        ]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Config(format!("CSV row has {} fields, expected {}", rec.len(), CSV_HEADER.len())));
        }
        let f = |i: usize| -> Result<f64> { parse_one(CSV_HEADER[i], &rec[i]) };
        let opt = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        Ok(ConvergenceRecord {
            kind: MultiplierKind::parse(&rec[0]).ok_or_else(|| Error::Config(format!("kind: {:?}", &rec[0])))?,
            t: f(1)?,
            n: parse_one("n", &rec[2])?,
            h: f(3)?,
            err_phi_h1: f(4)?,
            err_u_h1: f(5)?,
            err_zeta_l2: f(6)?,
            err_zeta_tl2: f(7)?,
            eoc_phi: opt(8)?,
            eoc_u: opt(9)?,
            eoc_zeta_tl2: opt(10)?,
            beta_h: opt(11)?,
            solve_path: SolvePath::parse(&rec[12]).ok_or_else(|| Error::Config(format!("solve_path: {:?}", &rec[12])))?,
            wall_time: f(13)?,
        })
    }
}

pub fn write_csv<W: Write>(records: &[ConvergenceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ConvergenceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    r.records().map(|rec| ConvergenceRecord::from_fields(&rec?)).collect()
}

/// A case that produced no record.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseFailure {
    pub kind: MultiplierKind,
    pub t: f64,
    pub n: usize,
    pub solve_path: SolvePath,
    pub error: String,
}

impl fmt::Display for CaseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={} t={} n={} path={}: {}", self.kind, self.t, self.n, self.solve_path, self.error)
    }
}

#[derive(Debug, Clone, Default)]
pub struct StudyOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub failures: Vec<CaseFailure>,
}

impl StudyOutcome {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Discretization {
    n: usize,
    mesh: Mesh,
    layout: DofLayout,
    basis: MultiplierBasis,
}

struct Solved {
    solution: PlateSolution,
    norms: Option<ErrorNorms>,
    seconds: f64,
}

fn manufactured_loads(material: &Material, t: f64) -> Result<(Loads, crate::mms::ExactFields)> {
    apply_mms_loads(Arc::new(DefaultCase), material, t)
}

fn check_unit_square(mesh: &Mesh) -> Result<()> {
    let inside = mesh.vertices().iter().all(|p| (-1e-12..=1.0 + 1e-12).contains(&p[0]) && (-1e-12..=1.0 + 1e-12).contains(&p[1]));
    if inside && (mesh.total_area() - 1.0).abs() < 1e-12 {
        Ok(())
    } else {
        Err(Error::Config("the manufactured solution is defined on the unit square only".into()))
    }
}

fn solve_case(d: &Discretization, material: &Material, t: f64, path: SolvePath, load: LoadCase) -> Result<Solved> {
    let start = Instant::now();
    match load {
        LoadCase::Manufactured => {
            check_unit_square(&d.mesh)?;
            let (loads, exact) = manufactured_loads(material, t)?;
            let system = assemble(&d.mesh, &d.layout, &d.basis, material, t, &loads)?;
            let solution = solve(&system, path)?;
            let fields = DiscreteFields::new(&d.mesh, &d.layout, &d.basis, &solution);
            let norms = error_norms_against(&fields, &exact, t);
            Ok(Solved { solution, norms: Some(norms), seconds: start.elapsed().as_secs_f64() })
        }
        LoadCase::UniformLoad => {
            let system = assemble(&d.mesh, &d.layout, &d.basis, material, t, &Loads::uniform(1.0))?;
            let solution = solve(&system, path)?;
            Ok(Solved { solution, norms: None, seconds: start.elapsed().as_secs_f64() })
        }
    }
}

fn rate(prev: Option<(f64, f64)>, cur: (f64, f64)) -> Option<f64> {
    let (h0, e0) = prev?;
    let (h1, e1) = cur;
    (e0 > 0.0 && e1 > 0.0 && h0 != h1).then(|| (e0 / e1).ln() / (h0 / h1).ln())
}

/// Solves every `(kind, t, path, n)` case and tabulates errors, rates and
/// inf-sup constants. Failing cases are reported and skipped; the CSV is
/// written to `config.out` if set. The standard kind is only solved on the
/// full path when both paths are requested.
pub fn run_convergence_study(config: &StudyConfig) -> Result<StudyOutcome> {
    config.validate()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = config.pool()?;
    let meshes = config.meshes();
    let weighting = Weighting::Equal;

    let mut failures = Vec::new();
    let mut disc: BTreeMap<(MultiplierKind, usize), Discretization> = BTreeMap::new();
    for &kind in &config.kinds {
        for (li, (n, mesh)) in meshes.iter().enumerate() {
            let built = mesh
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|m| discretize(m, kind, &weighting).map(|(_, l, b)| (m.clone(), l, b)).map_err(|e| e.to_string()));
            match built {
                Ok((mesh, layout, basis)) => {
                    disc.insert((kind, li), Discretization { n: *n, mesh, layout, basis });
                }
                Err(error) => {
                    for &t in &config.thicknesses {
                        for &path in &config.paths {
                            failures.push(CaseFailure { kind, t, n: *n, solve_path: path, error: error.clone() });
                        }
                    }
                }
            }
        }
    }

    let betas: BTreeMap<(MultiplierKind, usize), f64> = pool.install(|| {
        disc.par_iter()
            .filter(|(_, d)| d.n <= config.beta_max_n)
            .filter_map(|(key, d)| crate::diagnostics::infsup_constant(&d.mesh, &d.layout, &d.basis).ok().map(|b| (*key, b)))
            .collect()
    });

    let paths_for = |kind: MultiplierKind| -> Vec<SolvePath> {
        if kind == MultiplierKind::Standard && config.paths.len() > 1 {
            vec![SolvePath::Full]
        } else {
            config.paths.clone()
        }
    };
    let mut tasks = Vec::new();
    for &kind in &config.kinds {
        for (ti, &t) in config.thicknesses.iter().enumerate() {
            for path in paths_for(kind) {
                for li in 0..meshes.len() {
                    if disc.contains_key(&(kind, li)) {
                        tasks.push((kind, ti, t, path, li));
                    }
                }
            }
        }
    }
    let solved: Vec<Result<Solved>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(kind, _, t, path, li)| solve_case(&disc[&(kind, li)], &config.material, t, path, config.load))
            .collect()
    });
    let mut results: BTreeMap<(MultiplierKind, usize, SolvePath, usize), Solved> = BTreeMap::new();
    for (&(kind, ti, t, path, li), res) in tasks.iter().zip(solved) {
        match res {
            Ok(s) => {
                results.insert((kind, ti, path, li), s);
            }
            Err(e) => failures.push(CaseFailure { kind, t, n: meshes[li].0, solve_path: path, error: e.to_string() }),
        }
    }

    if config.load == LoadCase::UniformLoad {
        self_convergence(config, &disc, &mut results, &mut failures, &pool);
    }

    let mut records = Vec::new();
    for &kind in &config.kinds {
        for (ti, &t) in config.thicknesses.iter().enumerate() {
            for path in paths_for(kind) {
                let mut prev: Option<(f64, ErrorNorms)> = None;
                for li in 0..meshes.len() {
                    let Some(s) = results.get(&(kind, ti, path, li)) else {
                        prev = None;
                        continue;
                    };
                    let Some(e) = s.norms else { continue };
                    let d = &disc[&(kind, li)];
                    let h = d.mesh.h();
                    let r = |f: fn(&ErrorNorms) -> f64| rate(prev.map(|(hp, ep)| (hp, f(&ep))), (h, f(&e)));
                    records.push(ConvergenceRecord {
                        kind,
                        t,
                        n: d.n,
                        h,
                        err_phi_h1: e.phi_h1,
                        err_u_h1: e.u_h1,
                        err_zeta_l2: e.zeta_l2,
                        err_zeta_tl2: e.zeta_tl2,
                        eoc_phi: r(|e| e.phi_h1),
                        eoc_u: r(|e| e.u_h1),
                        eoc_zeta_tl2: r(|e| e.zeta_tl2),
                        beta_h: betas.get(&(kind, li)).copied(),
                        solve_path: path,
                        wall_time: s.seconds,
                    });
                    prev = Some((h, e));
                }
            }
        }
    }
    records.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then(a.t.total_cmp(&b.t))
            .then(a.n.cmp(&b.n))
            .then(a.solve_path.cmp(&b.solve_path))
    });
    failures.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then(a.t.total_cmp(&b.t))
            .then(a.n.cmp(&b.n))
            .then(a.solve_path.cmp(&b.solve_path))
    });

    if let Some(out) = &config.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        write_csv(&records, std::fs::File::create(out)?)?;
    }
    Ok(StudyOutcome { records, failures })
}

/// Fills in errors against the finest successful level of each
/// `(kind, t, path)` group. The finest level itself gets zero errors.
fn self_convergence(
    config: &StudyConfig,
    disc: &BTreeMap<(MultiplierKind, usize), Discretization>,
    results: &mut BTreeMap<(MultiplierKind, usize, SolvePath, usize), Solved>,
    failures: &mut Vec<CaseFailure>,
    pool: &rayon::ThreadPool,
) {
    let finest = config.levels.len() - 1;
    let mut groups: Vec<(MultiplierKind, usize, SolvePath)> = results.keys().map(|&(k, ti, p, _)| (k, ti, p)).collect();
    groups.dedup();
    for (kind, ti, path) in groups {
        let t = config.thicknesses[ti];
        let Some(reference) = results.get(&(kind, ti, path, finest)) else {
            for li in 0..finest {
                if results.remove(&(kind, ti, path, li)).is_some() {
                    failures.push(CaseFailure {
                        kind,
                        t,
                        n: config.levels[li],
                        solve_path: path,
                        error: "reference solution on the finest level is unavailable".into(),
                    });
                }
            }
            continue;
        };
        let fd = &disc[&(kind, finest)];
        let ref_fields = DiscreteFields::new(&fd.mesh, &fd.layout, &fd.basis, &reference.solution);
        let coarse: Vec<usize> = (0..finest).filter(|li| results.contains_key(&(kind, ti, path, *li))).collect();
        let norms: Vec<(usize, ErrorNorms, f64)> = pool.install(|| {
            coarse
                .par_iter()
                .map(|&li| {
                    let start = Instant::now();
                    let d = &disc[&(kind, li)];
                    let s = &results[&(kind, ti, path, li)];
                    let f = DiscreteFields::new(&d.mesh, &d.layout, &d.basis, &s.solution);
                    (li, reference_error_norms(&f, &ref_fields, t), start.elapsed().as_secs_f64())
                })
                .collect()
        });
        for (li, e, secs) in norms {
            let s = results.get_mut(&(kind, ti, path, li)).expect("present");
            s.norms = Some(e);
            s.seconds += secs;
        }
        results.get_mut(&(kind, ti, path, finest)).expect("present").norms = Some(ErrorNorms::ZERO);
    }
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn is_success(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult { name: name.into(), passed, detail: detail.into() });
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

pub const PARTITION_TOL: f64 = 1e-12;
pub const CONTINUITY_TOL: f64 = 1e-12;
pub const REFERENCE_BIORTH_TOL: f64 = 1e-14;
pub const GLOBAL_BIORTH_TOL: f64 = 1e-13;
pub const CONSTANT_APPROX_TOL: f64 = 1e-12;
pub const MIN_APPROX_EOC: f64 = 0.9;
pub const MIN_INFSUP_RATIO: f64 = 0.5;
pub const MIN_INFSUP: f64 = 1e-3;
pub const FORTIN_IDENTITY_TOL: f64 = 1e-10;
pub const FORTIN_MEAN_TOL: f64 = 1e-12;

/// Runs the structural checks on every configured level and kind.
/// Invalid meshes are reported and every other check is skipped.
pub fn run_verifications(config: &StudyConfig) -> VerificationReport {
    let mut report = VerificationReport::default();
    if let Err(e) = config.validate() {
        report.push("configuration", false, e.to_string());
        return report;
    }
    faer::set_global_parallelism(faer::Par::Seq);

    let mut meshes = Vec::new();
    let mut valid = true;
    for (n, mesh) in config.meshes() {
        match mesh.and_then(|m| validate_interior_vertex_assumption(&m).map(|_| m)) {
            Ok(m) => meshes.push((n, m)),
            Err(e) => {
                valid = false;
                report.push(format!("mesh validation n={n}"), false, e.to_string());
            }
        }
    }
    if !valid {
        return report;
    }
    report.push("mesh validation", true, format!("{} level(s), every triangle has an interior vertex", meshes.len()));

    if config.kinds.contains(&MultiplierKind::Dual) {
        let dev = reference_biorthogonality_check();
        report.push(
            "[dual] reference biorthogonality",
            dev <= REFERENCE_BIORTH_TOL,
            format!("max deviation {dev:.3e} (tol {REFERENCE_BIORTH_TOL:e})"),
        );
    }

    let weighting = Weighting::Equal;
    let on_unit_square = meshes.iter().all(|(_, m)| check_unit_square(m).is_ok());
    for &kind in &config.kinds {
        let tag = format!("[{kind}]");
        let mut dims = Vec::new();
        let mut pou = 0.0f64;
        let mut cont = 0.0f64;
        let mut biorth = 0.0f64;
        let mut d_block = 0.0f64;
        let mut fortin = (0.0f64, 0.0f64);
        let mut fortin_err = None;
        for (n, mesh) in &meshes {
            let (_, layout, basis) = match discretize(mesh, kind, &weighting) {
                Ok(x) => x,
                Err(e) => {
                    report.push(format!("{tag} multiplier construction n={n}"), false, e.to_string());
                    continue;
                }
            };
            dims.push((*n, basis.dim(), layout.dim_s()));
            pou = pou.max(partition_of_unity_defect(mesh, &basis));
            match kind {
                MultiplierKind::Standard => {
                    cont = cont.max(continuity_defect(mesh, &basis));
                    if on_unit_square {
                        let samples: [&dyn ClampedPair; 3] =
                            [&PolynomialPair { a: 1.0, b: 0.0 }, &PolynomialPair { a: 0.5, b: -2.0 }, &SkewPolynomialPair];
                        match fortin_diagnostics(mesh, &layout, &basis, &samples) {
                            Ok(r) => fortin = (fortin.0.max(r.identity_defect), fortin.1.max(r.element_mean_defect)),
                            Err(e) => fortin_err = Some(e.to_string()),
                        }
                    }
                }
                MultiplierKind::Dual => {
                    let (off, diag) = biorthogonality_defect(mesh, &layout, &basis);
                    biorth = biorth.max(off / diag);
                    match assemble(mesh, &layout, &basis, &config.material, config.thicknesses[0], &Loads::zero()) {
                        Ok(sys) => {
                            let (off, diag) = diagonal_dominance(&sys.d);
                            d_block = d_block.max(off / diag);
                        }
                        Err(e) => report.push(format!("{tag} assembly n={n}"), false, e.to_string()),
                    }
                }
            }
        }

        let dims_ok = dims.iter().all(|&(_, a, b)| a == b);
        let detail: Vec<String> = dims.iter().map(|(n, a, b)| format!("n={n}: {a}/{b}")).collect();
        report.push(format!("{tag} dim M_h = dim S_h"), dims_ok, detail.join(", "));
        report.push(format!("{tag} partition of unity"), pou <= PARTITION_TOL, format!("max deviation {pou:.3e}"));
        match kind {
            MultiplierKind::Standard => {
                report.push(format!("{tag} continuity"), cont <= CONTINUITY_TOL, format!("max jump {cont:.3e}"));
                if let Some(e) = fortin_err {
                    report.push(format!("{tag} Fortin projectors"), false, e);
                } else if on_unit_square {
                    report.push(
                        format!("{tag} Fortin identity"),
                        fortin.0 <= FORTIN_IDENTITY_TOL,
                        format!("max defect {:.3e} (tol {FORTIN_IDENTITY_TOL:e})", fortin.0),
                    );
                    report.push(
                        format!("{tag} Fortin element means"),
                        fortin.1 <= FORTIN_MEAN_TOL,
                        format!("max |∫_T(R_h v − v)| {:.3e} (tol {FORTIN_MEAN_TOL:e})", fortin.1),
                    );
                } else {
                    report.push(format!("{tag} Fortin identity"), true, "skipped: samples need the unit square");
                }
            }
            MultiplierKind::Dual => {
                report.push(
                    format!("{tag} global biorthogonality"),
                    biorth <= GLOBAL_BIORTH_TOL,
                    format!("max off-diagonal/diagonal {biorth:.3e}"),
                );
                report.push(
                    format!("{tag} diagonal D block"),
                    d_block <= GLOBAL_BIORTH_TOL,
                    format!("max off-diagonal/diagonal {d_block:.3e}"),
                );
            }
        }

        let mesh_list: Vec<Mesh> = meshes.iter().map(|(_, m)| m.clone()).collect();
        match multiplier_approximation_study(kind, &weighting, &|_| 1.0, &mesh_list) {
            Ok(errs) => {
                let worst = errs.iter().map(|e| e.1).fold(0.0f64, f64::max);
                report.push(format!("{tag} constants reproduced"), worst <= CONSTANT_APPROX_TOL, format!("max error {worst:.3e}"));
            }
            Err(e) => report.push(format!("{tag} constants reproduced"), false, e.to_string()),
        }
        if mesh_list.len() >= 2 {
            let probes: [(&str, &dyn Fn(crate::mesh::Point) -> f64); 2] =
                [("2 + sin(x + y)", &|p| 2.0 + (p[0] + p[1]).sin()), ("x", &|p| p[0])];
            for (name, probe) in probes {
                match multiplier_approximation_study(kind, &weighting, probe, &mesh_list) {
                    Ok(errs) => {
                        let rates = eoc(&errs);
                        let last = *rates.last().expect("two levels");
                        report.push(
                            format!("{tag} approximation of {name}"),
                            last >= MIN_APPROX_EOC,
                            format!("finest EOC {last:.3} (rates {})", fmt_list(&rates)),
                        );
                    }
                    Err(e) => report.push(format!("{tag} approximation of {name}"), false, e.to_string()),
                }
            }
        } else {
            report.push(format!("{tag} approximation order"), true, "skipped: needs two levels");
        }

        let small: Vec<Mesh> = meshes.iter().filter(|(n, _)| *n <= config.beta_max_n).map(|(_, m)| m.clone()).collect();
        if small.len() >= 2 {
            match infsup_estimate(&small, kind, &weighting) {
                Ok(r) => {
                    let ok = r.ratio() >= MIN_INFSUP_RATIO && r.min() > MIN_INFSUP;
                    let betas: Vec<f64> = r.values.iter().map(|v| v.1).collect();
                    report.push(
                        format!("{tag} inf-sup"),
                        ok,
                        format!("beta_h {} min/max {:.3}", fmt_list(&betas), r.ratio()),
                    );
                }
                Err(e) => report.push(format!("{tag} inf-sup"), false, e.to_string()),
            }
        } else {
            report.push(format!("{tag} inf-sup"), true, "skipped: needs two levels with n <= beta-max-n");
        }
    }
    report
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}
