//! Command-line front end: config parsing, CSV emission, sweep drivers and
//! the self-verification suite.
//!
//! Output contract: every sweep writes rows under the fixed header
//!
//!   param,e_london,e_na1,e_na2,e_na_total,ratio,fx_na,fy_na,fz_na,terms_used,converged
//!
//! with all floating-point fields in C-style `%.12e` notation, LF line
//! endings, and rows in sweep order. Force columns are left empty by the
//! energy-only commands. Output bytes are deterministic for a given config,
//! independent of the thread count (rows are computed into an indexed
//! vector, never appended in completion order).
//!
//! Exit codes: 0 success, 1 verification failure, 2 domain/config error,
//! 3 numerical non-convergence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::energies::{breakdown, breakdown_capacitor_asymptotic, EnergyBreakdown};
use crate::forces::{force_on_atom, AtomPair, AtomSelect};
use crate::model::{
    linspace, logspace, AtomPolarization, FdCtrl, Geometry, PairCoupling, ScanSpec, SeriesCtrl, SweepAxis, UnitMode,
    Vec3,
};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "param,e_london,e_na1,e_na2,e_na_total,ratio,fx_na,fy_na,fz_na,terms_used,converged";

// ---------------------------------------------------------------------------
// Config file model.
// ---------------------------------------------------------------------------

/// Sample spacing of the sweep parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// What the swept value does to the atom placements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// The swept value replaces atom B's coordinate on the sweep axis.
    MoveB,
    /// The swept value is added to both atoms' coordinates on the sweep
    /// axis, translating the pair rigidly (separation held fixed).
    TranslatePair,
}

/// Everything a sweep command needs, resolved from the INI config.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub coupling: PairCoupling,
    pub atom_a: Vec3,
    pub atom_b: Vec3,
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
    pub mode: SweepMode,
    /// Fixed pair separation for the sphere commands (`r_ab` key).
    pub pair_separation: Option<f64>,
    /// Per-axis mean squared dipole components, shared by both atoms; only
    /// the first-order surface channel sees them.
    pub polarization: AtomPolarization,
    pub series: SeriesCtrl,
    pub fd: FdCtrl,
    pub out_path: Option<PathBuf>,
    /// Fractional digits of the scientific CSV fields.
    pub precision: usize,
}

impl RunConfig {
    /// The swept parameter values, endpoint-inclusive.
    pub fn sweep_values(&self) -> Result<Vec<f64>> {
        match self.spacing {
            Spacing::Linear => Ok(linspace(self.start, self.stop, self.count)),
            Spacing::Log => {
                if self.start <= 0.0 || self.stop <= 0.0 {
                    return Err(Error::Domain(format!(
                        "log spacing needs positive endpoints, got {} and {}",
                        self.start, self.stop
                    )));
                }
                Ok(logspace(self.start, self.stop, self.count))
            }
        }
    }

    fn require_pair_separation(&self) -> Result<f64> {
        self.pair_separation.ok_or_else(|| Error::Domain("this command needs an `r_ab` key in [scan]".into()))
    }
}

/// Sections and keys of a parsed INI file, everything lower-cased.
struct Ini {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Ini {
    fn parse(text: &str) -> Result<Ini> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_lowercase();
                sections.entry(name.clone()).or_default();
                current = Some(name);
            } else if let Some((key, value)) = line.split_once('=') {
                let section = current
                    .as_ref()
                    .ok_or_else(|| Error::Domain(format!("config line {}: key before any [section]", idx + 1)))?;
                sections
                    .get_mut(section)
                    .expect("section was inserted when opened")
                    .insert(key.trim().to_lowercase(), value.trim().to_string());
            } else {
                return Err(Error::Domain(format!(
                    "config line {}: expected `[section]` or `key = value`, got `{line}`",
                    idx + 1
                )));
            }
        }
        Ok(Ini { sections })
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| Error::Domain(format!("config is missing required key `{key}` in [{section}]")))
    }

    /// Reject anything outside the known schema so typos fail loudly.
    fn check_known(&self, known: &[(&str, &[&str])]) -> Result<()> {
        for (section, keys) in &self.sections {
            let Some((_, allowed)) = known.iter().find(|(s, _)| s == section) else {
                return Err(Error::Domain(format!("config has unknown section [{section}]")));
            };
            for key in keys.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::Domain(format!("config has unknown key `{key}` in [{section}]")));
                }
            }
        }
        Ok(())
    }
}

/// A decimal with an optional length-unit suffix: `nm` and `um` scale to
/// meters, `L` is the reduced length unit (scale 1). Bare numbers pass
/// through unscaled.
fn parse_length(value: &str) -> Result<f64> {
    let t = value.trim();
    for (suffix, scale) in [("nm", 1e-9), ("um", 1e-6), ("L", 1.0)] {
        if let Some(num) = t.strip_suffix(suffix) {
            return Ok(parse_number(num)? * scale);
        }
    }
    parse_number(t)
}

fn parse_number(value: &str) -> Result<f64> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::Domain(format!("expected a number, got `{}`", value.trim())))?;
    if !v.is_finite() {
        return Err(Error::Domain(format!("number out of range: `{}`", value.trim())));
    }
    Ok(v)
}

fn parse_count(value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Domain(format!("expected a positive integer, got `{}`", value.trim())))
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("geometry", &["kind", "d", "a"]),
    ("coupling", &["lambda", "units", "d2_x", "d2_y", "d2_z"]),
    (
        "scan",
        &["a_x", "a_y", "a_z", "b_x", "b_y", "b_z", "axis", "start", "stop", "count", "spacing", "mode", "r_ab"],
    ),
    ("numerics", &["rel_tol", "n_max", "min_terms", "fd_base_step", "fd_levels"]),
    ("output", &["path", "precision"]),
];

/// Parse an INI config into a [`RunConfig`]. Geometry parameters, atom
/// coordinates, sweep bounds and `r_ab` accept unit suffixes; everything
/// else is a bare number, integer or keyword.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let ini = Ini::parse(text)?;
    ini.check_known(KNOWN_KEYS)?;

    let geometry = match ini.require("geometry", "kind")?.to_lowercase().as_str() {
        "free_space" => Geometry::FreeSpace,
        "plane" => Geometry::Plane,
        "capacitor" => Geometry::Capacitor { d: parse_length(ini.require("geometry", "d")?)? },
        "sphere_grounded" => Geometry::SphereGrounded { a: parse_length(ini.require("geometry", "a")?)? },
        "sphere_isolated" => Geometry::SphereIsolated { a: parse_length(ini.require("geometry", "a")?)? },
        other => {
            return Err(Error::Domain(format!(
                "unknown geometry kind `{other}` (expected free_space, plane, capacitor, sphere_grounded or sphere_isolated)"
            )))
        }
    };
    geometry.validate()?;

    let unit_mode = match ini.get("coupling", "units").unwrap_or("reduced").to_lowercase().as_str() {
        "reduced" => UnitMode::Reduced,
        "si" => UnitMode::Si,
        other => return Err(Error::Domain(format!("unknown unit mode `{other}` (expected reduced or si)"))),
    };
    let lambda = match ini.get("coupling", "lambda") {
        Some(v) => parse_number(v)?,
        None => 1.0,
    };
    let coupling = PairCoupling::new(lambda, unit_mode)?;
    let d2_component = |key: &str| -> Result<f64> {
        match ini.get("coupling", key) {
            Some(v) => parse_number(v),
            None => Ok(0.0),
        }
    };
    let polarization = AtomPolarization::new([d2_component("d2_x")?, d2_component("d2_y")?, d2_component("d2_z")?])?;

    let coord = |key: &str| -> Result<f64> {
        match ini.get("scan", key) {
            Some(v) => parse_length(v),
            None => Ok(0.0),
        }
    };
    let atom_a = Vec3::new(coord("a_x")?, coord("a_y")?, coord("a_z")?);
    let atom_b = Vec3::new(coord("b_x")?, coord("b_y")?, coord("b_z")?);

    let axis = match ini.get("scan", "axis").unwrap_or("x").to_lowercase().as_str() {
        "x" => SweepAxis::X,
        "y" => SweepAxis::Y,
        "z" => SweepAxis::Z,
        other => return Err(Error::Domain(format!("unknown sweep axis `{other}` (expected x, y or z)"))),
    };
    let spacing = match ini.get("scan", "spacing").unwrap_or("linear").to_lowercase().as_str() {
        "linear" => Spacing::Linear,
        "log" => Spacing::Log,
        other => return Err(Error::Domain(format!("unknown spacing `{other}` (expected linear or log)"))),
    };
    let mode = match ini.get("scan", "mode").unwrap_or("move_b").to_lowercase().as_str() {
        "move_b" => SweepMode::MoveB,
        "translate_pair" => SweepMode::TranslatePair,
        other => return Err(Error::Domain(format!("unknown sweep mode `{other}` (expected move_b or translate_pair)"))),
    };
    let start = parse_length(ini.require("scan", "start")?)?;
    let stop = parse_length(ini.require("scan", "stop")?)?;
    let count = parse_count(ini.require("scan", "count")?)?;
    if count < 2 {
        return Err(Error::Domain(format!("scan needs at least 2 samples, got {count}")));
    }
    let pair_separation = match ini.get("scan", "r_ab") {
        Some(v) => Some(parse_length(v)?),
        None => None,
    };

    let defaults = SeriesCtrl::default();
    let series = SeriesCtrl {
        rel_tol: match ini.get("numerics", "rel_tol") {
            Some(v) => parse_number(v)?,
            None => defaults.rel_tol,
        },
        n_max: match ini.get("numerics", "n_max") {
            Some(v) => parse_count(v)?,
            None => defaults.n_max,
        },
        min_terms: match ini.get("numerics", "min_terms") {
            Some(v) => parse_count(v)?,
            None => defaults.min_terms,
        },
    };
    series.validate()?;
    let fd_defaults = FdCtrl::default();
    let fd = FdCtrl {
        base_step: match ini.get("numerics", "fd_base_step") {
            Some(v) => parse_number(v)?,
            None => fd_defaults.base_step,
        },
        richardson_levels: match ini.get("numerics", "fd_levels") {
            Some(v) => parse_count(v)? as u32,
            None => fd_defaults.richardson_levels,
        },
    };
    fd.validate()?;

    let precision = match ini.get("output", "precision") {
        Some(v) => {
            let p = parse_count(v)?;
            if !(1..=17).contains(&p) {
                return Err(Error::Domain(format!("output precision must be between 1 and 17, got {p}")));
            }
            p
        }
        None => 12,
    };

    Ok(RunConfig {
        geometry,
        coupling,
        atom_a,
        atom_b,
        axis,
        start,
        stop,
        count,
        spacing,
        mode,
        pair_separation,
        polarization,
        series,
        fd,
        out_path: ini.get("output", "path").map(PathBuf::from),
        precision,
    })
}

// ---------------------------------------------------------------------------
// CSV emission.
// ---------------------------------------------------------------------------

/// One output row. Force components are `None` for energy-only commands,
/// which renders the three columns empty.
#[derive(Debug, Clone, Copy)]
pub struct CsvRow {
    pub param: f64,
    pub e_london: f64,
    pub e_na1: f64,
    pub e_na2: f64,
    pub e_na_total: f64,
    pub ratio: f64,
    pub f_na: Option<Vec3>,
    pub terms_used: usize,
    pub converged: bool,
}

impl CsvRow {
    fn from_breakdown(param: f64, b: &EnergyBreakdown, ratio: f64, f_na: Option<Vec3>) -> CsvRow {
        CsvRow {
            param,
            e_london: b.e_london,
            e_na1: b.e_na1,
            e_na2: b.e_na2,
            e_na_total: b.e_na_total(),
            ratio,
            f_na,
            terms_used: b.terms_used,
            converged: b.converged,
        }
    }

    pub fn to_line(&self, digits: usize) -> String {
        let (fx, fy, fz) = match self.f_na {
            Some(f) => (fmt_sci(f.x, digits), fmt_sci(f.y, digits), fmt_sci(f.z, digits)),
            None => (String::new(), String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_sci(self.param, digits),
            fmt_sci(self.e_london, digits),
            fmt_sci(self.e_na1, digits),
            fmt_sci(self.e_na2, digits),
            fmt_sci(self.e_na_total, digits),
            fmt_sci(self.ratio, digits),
            fx,
            fy,
            fz,
            self.terms_used,
            self.converged
        )
    }
}

/// C-style `%.<digits>e`: fixed fractional digits, explicit exponent sign,
/// at least two exponent digits. Negative zero is collapsed to positive so
/// the bytes do not depend on rounding direction.
pub fn fmt_sci(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.digits$e}");
    let (mantissa, exponent) = s.split_once('e').expect("{:e} always emits an exponent");
    let e: i32 = exponent.parse().expect("exponent of {:e} is an integer");
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn write_csv(path: &Path, rows: &[CsvRow], digits: usize) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 160 + CSV_HEADER.len() + 1);
    text.push_str(CSV_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.to_line(digits));
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Domain(format!("cannot write output file {}: {e}", path.display())))
}

/// Run the per-sample closure across a rayon pool sized by the
/// DISPERSIA_THREADS environment variable (default: all cores), collecting
/// rows in sweep order and enforcing that every row converged.
fn compute_rows<F>(count: usize, per_sample: F) -> Result<Vec<CsvRow>>
where
    F: Fn(usize) -> Result<CsvRow> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("DISPERSIA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::Domain(format!("DISPERSIA_THREADS must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Domain(format!("cannot build thread pool: {e}")))?;
    let rows: Vec<Result<CsvRow>> = pool.install(|| (0..count).into_par_iter().map(&per_sample).collect());
    let rows: Vec<CsvRow> = rows.into_iter().collect::<Result<_>>()?;
    for row in &rows {
        if !row.converged {
            return Err(Error::NonConvergence(format!(
                "row at param {} did not converge within the series budget",
                row.param
            )));
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Sweep commands.
// ---------------------------------------------------------------------------

fn capacitor_gap(cfg: &RunConfig) -> Result<f64> {
    match cfg.geometry {
        Geometry::Capacitor { d } => Ok(d),
        _ => Err(Error::Domain("this command needs `kind = capacitor` in [geometry]".into())),
    }
}

fn sphere_radius(cfg: &RunConfig) -> Result<f64> {
    match cfg.geometry {
        Geometry::SphereGrounded { a } | Geometry::SphereIsolated { a } => Ok(a),
        _ => Err(Error::Domain("this command needs a sphere geometry in [geometry]".into())),
    }
}

fn pair_with_pol(cfg: &RunConfig, r_a: Vec3, r_b: Vec3) -> AtomPair {
    AtomPair { r_a, r_b, pol_a: cfg.polarization, pol_b: cfg.polarization }
}

/// Atom placements at one swept value, per the configured sweep mode.
fn placed(cfg: &RunConfig, value: f64) -> (Vec3, Vec3) {
    let axis = match cfg.axis {
        SweepAxis::X => 0,
        SweepAxis::Y => 1,
        SweepAxis::Z => 2,
    };
    match cfg.mode {
        SweepMode::MoveB => (cfg.atom_a, cfg.atom_b.with(axis, value)),
        SweepMode::TranslatePair => (
            cfg.atom_a.with(axis, cfg.atom_a.get(axis) + value),
            cfg.atom_b.with(axis, cfg.atom_b.get(axis) + value),
        ),
    }
}

/// Energy channels for a pair above the grounded plane; `param` is the
/// swept value (atom B's coordinate, or the rigid offset in translate_pair
/// mode), `ratio` the non-additive to London quotient.
fn op_plane_scan(cfg: &RunConfig, out: &Path) -> Result<()> {
    if !matches!(cfg.geometry, Geometry::Plane) {
        return Err(Error::Domain("plane_scan needs `kind = plane` in [geometry]".into()));
    }
    if cfg.mode == SweepMode::MoveB && cfg.spacing == Spacing::Linear {
        let spec = ScanSpec {
            geometry: cfg.geometry,
            coupling: cfg.coupling,
            atom_a: cfg.atom_a,
            atom_b: cfg.atom_b,
            axis: cfg.axis,
            start: cfg.start,
            stop: cfg.stop,
            count: cfg.count,
            out_path: None,
        };
        spec.validate()?;
    }
    let values = cfg.sweep_values()?;
    let rows = compute_rows(cfg.count, |i| {
        let (ra, rb) = placed(cfg, values[i]);
        let b = breakdown(&cfg.coupling, &cfg.geometry, ra, rb, &cfg.series)?;
        Ok(CsvRow::from_breakdown(values[i], &b, b.e_na_total() / b.e_london, None))
    })?;
    write_csv(out, &rows, cfg.precision)
}

/// Energy channels across the capacitor gap against in-plane separation,
/// `param = s/d`. Writes a companion `<out>.asym.csv` holding the same
/// sweep evaluated with the leading large-separation kernel.
fn op_capacitor_ratio(cfg: &RunConfig, out: &Path) -> Result<()> {
    let d = capacitor_gap(cfg)?;
    let values = cfg.sweep_values()?;
    let place = |s: f64| (cfg.atom_a, Vec3::new(cfg.atom_a.x + s, cfg.atom_a.y, cfg.atom_b.z));
    let rows = compute_rows(cfg.count, |i| {
        let (ra, rb) = place(values[i]);
        let b = breakdown(&cfg.coupling, &cfg.geometry, ra, rb, &cfg.series)?;
        Ok(CsvRow::from_breakdown(values[i] / d, &b, b.e_na_total() / b.e_london, None))
    })?;
    write_csv(out, &rows, cfg.precision)?;

    let asym_rows = compute_rows(cfg.count, |i| {
        let (ra, rb) = place(values[i]);
        let b = breakdown_capacitor_asymptotic(&cfg.coupling, ra, rb, d)?;
        Ok(CsvRow::from_breakdown(values[i] / d, &b, b.e_na_total() / b.e_london, None))
    })?;
    write_csv(&asym_twin_path(out), &asym_rows, cfg.precision)
}

/// `<stem>.asym.csv` beside the main output.
fn asym_twin_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.asym.csv"))
}

/// Force on atom A against in-plane separation in the capacitor,
/// `param = s/d`, `ratio` the signed quotient of the NA and London force
/// components along the sweep direction. Writes a companion
/// `<out>.asym.csv` with the same sweep driven by the large-separation
/// kernel (forces by central differences of its energies).
fn op_capacitor_force(cfg: &RunConfig, out: &Path) -> Result<()> {
    let d = capacitor_gap(cfg)?;
    let values = cfg.sweep_values()?;
    let place = |s: f64| (cfg.atom_a, Vec3::new(cfg.atom_a.x + s, cfg.atom_a.y, cfg.atom_b.z));
    let rows = compute_rows(cfg.count, |i| {
        let (ra, rb) = place(values[i]);
        let b = breakdown(&cfg.coupling, &cfg.geometry, ra, rb, &cfg.series)?;
        let f =
            force_on_atom(AtomSelect::A, &cfg.coupling, &pair_with_pol(cfg, ra, rb), &cfg.geometry, &cfg.fd, &cfg.series)?;
        let ratio = f.f_na.x / f.f_london.x;
        Ok(CsvRow::from_breakdown(values[i] / d, &b, ratio, Some(f.f_na)))
    })?;
    write_csv(out, &rows, cfg.precision)?;

    let asym_rows = compute_rows(cfg.count, |i| {
        let (ra, rb) = place(values[i]);
        let b = breakdown_capacitor_asymptotic(&cfg.coupling, ra, rb, d)?;
        let f_na = asym_na_force(cfg, ra, rb, d)?;
        let f_london = london_force_on_a(&cfg.coupling, ra, rb)?;
        Ok(CsvRow::from_breakdown(values[i] / d, &b, f_na.x / f_london.x, Some(f_na)))
    })?;
    write_csv(&asym_twin_path(out), &asym_rows, cfg.precision)
}

/// Analytic London force on atom A: E scales as R^-6, so the gradient is
/// -6 E / R along the pair axis.
fn london_force_on_a(coupling: &PairCoupling, r_a: Vec3, r_b: Vec3) -> Result<Vec3> {
    let e = crate::energies::london_energy(coupling, r_a, r_b)?;
    let sep = r_a - r_b;
    let r = sep.norm();
    Ok(sep * (6.0 * e / (r * r)))
}

/// Non-additive force on atom A from the asymptotic capacitor energies, by
/// central differences with one Richardson halving.
fn asym_na_force(cfg: &RunConfig, r_a: Vec3, r_b: Vec3, d: f64) -> Result<Vec3> {
    let s = ((r_a.x - r_b.x).powi(2) + (r_a.y - r_b.y).powi(2)).sqrt();
    let h0 = cfg.fd.base_step.min(0.25) * s.min((r_a - r_b).norm());
    let e_na = |ra: Vec3| -> Result<f64> {
        Ok(breakdown_capacitor_asymptotic(&cfg.coupling, ra, r_b, d)?.e_na_total())
    };
    let mut f = Vec3::new(0.0, 0.0, 0.0);
    for i in 0..3 {
        let diff = |h: f64| -> Result<f64> {
            let plus = e_na(r_a.with(i, r_a.get(i) + h))?;
            let minus = e_na(r_a.with(i, r_a.get(i) - h))?;
            Ok((plus - minus) / (2.0 * h))
        };
        let coarse = diff(h0)?;
        let fine = diff(0.5 * h0)?;
        f = f.with(i, -(4.0 * fine - coarse) / 3.0);
    }
    Ok(f)
}

/// Transverse pair near the sphere: atom B at distance r_B (the swept
/// value), atom A offset by `r_ab` at right angles to B's radius. `param =
/// r_B/a`; `ratio` is the signed NA/London quotient along the pair axis.
fn op_sphere_force(cfg: &RunConfig, out: &Path) -> Result<()> {
    let a = sphere_radius(cfg)?;
    let r_ab = cfg.require_pair_separation()?;
    let values = cfg.sweep_values()?;
    let rows = compute_rows(cfg.count, |i| {
        let rb_dist = values[i];
        let ra = Vec3::new(r_ab, 0.0, rb_dist);
        let rb = Vec3::new(0.0, 0.0, rb_dist);
        let b = breakdown(&cfg.coupling, &cfg.geometry, ra, rb, &cfg.series)?;
        let f =
            force_on_atom(AtomSelect::A, &cfg.coupling, &pair_with_pol(cfg, ra, rb), &cfg.geometry, &cfg.fd, &cfg.series)?;
        let ratio = f.f_na.x / f.f_london.x;
        Ok(CsvRow::from_breakdown(rb_dist / a, &b, ratio, Some(f.f_na)))
    })?;
    write_csv(out, &rows, cfg.precision)
}

/// Colinear pair on one radius, isolated against grounded sphere. Energy
/// columns hold the isolated-sphere channels; `ratio` is the quotient of the
/// isolated to grounded non-additive totals. `param = r_A/a`.
fn op_sphere_iso_vs_grounded(cfg: &RunConfig, out: &Path) -> Result<()> {
    let a = sphere_radius(cfg)?;
    let r_ab = cfg.require_pair_separation()?;
    let values = cfg.sweep_values()?;
    let rows = compute_rows(cfg.count, |i| {
        let ra = Vec3::new(0.0, 0.0, values[i]);
        let rb = Vec3::new(0.0, 0.0, values[i] + r_ab);
        let iso = breakdown(&cfg.coupling, &Geometry::SphereIsolated { a }, ra, rb, &cfg.series)?;
        let gnd = breakdown(&cfg.coupling, &Geometry::SphereGrounded { a }, ra, rb, &cfg.series)?;
        Ok(CsvRow::from_breakdown(values[i] / a, &iso, iso.e_na_total() / gnd.e_na_total(), None))
    })?;
    write_csv(out, &rows, cfg.precision)
}

/// Fixed atom pair, isolated sphere radius swept (log spacing recommended).
/// `param = a`; `ratio` carries the compensated combination
/// E_NA R^3 r_A^3 r_B^3 / a^3, which settles to a negative constant as the
/// radius shrinks.
fn op_axilrod_limit(cfg: &RunConfig, out: &Path) -> Result<()> {
    if !matches!(cfg.geometry, Geometry::SphereIsolated { .. }) {
        return Err(Error::Domain("axilrod_limit needs `kind = sphere_isolated` in [geometry]".into()));
    }
    let r3 = (cfg.atom_a - cfg.atom_b).norm().powi(3);
    let ra3 = cfg.atom_a.norm().powi(3);
    let rb3 = cfg.atom_b.norm().powi(3);
    let values = cfg.sweep_values()?;
    let rows = compute_rows(cfg.count, |i| {
        let a = values[i];
        let geom = Geometry::SphereIsolated { a };
        geom.validate()?;
        let b = breakdown(&cfg.coupling, &geom, cfg.atom_a, cfg.atom_b, &cfg.series)?;
        Ok(CsvRow::from_breakdown(a, &b, b.e_na_total() * r3 * ra3 * rb3 / a.powi(3), None))
    })?;
    write_csv(out, &rows, cfg.precision)
}

// ---------------------------------------------------------------------------
// Verification suite.
// ---------------------------------------------------------------------------

struct Reporter {
    all_passed: bool,
}

impl Reporter {
    fn new() -> Reporter {
        Reporter { all_passed: true }
    }

    fn check(&mut self, name: &str, max_residual: f64, tol: f64) {
        let ok = max_residual.is_finite() && max_residual <= tol;
        self.all_passed &= ok;
        println!("{} {name} max_residual={max_residual:.3e} tol={tol:.1e}", if ok { "PASS" } else { "FAIL" });
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn tensor_rel_diff(a: &crate::model::Tensor3, b: &crate::model::Tensor3) -> f64 {
    let scale = crate::model::tensor_max_abs(a).max(crate::model::tensor_max_abs(b));
    if scale == 0.0 {
        0.0
    } else {
        crate::model::tensor_max_abs(&crate::model::tensor_sub(a, b)) / scale
    }
}

/// Run all internal consistency checks, one PASS/FAIL line each. Returns
/// true when every check passed.
pub fn run_verify() -> bool {
    use crate::model::Geometry::*;
    use crate::{greens, oracle, specfun, tensor};

    let ctrl = SeriesCtrl::default();
    let coupling = PairCoupling::reduced();
    let mut rep = Reporter::new();

    // special functions against the extended-precision oracle
    {
        let mut worst: f64 = 0.0;
        for x in logspace(1e-6, 600.0, 200) {
            worst = worst.max(rel_diff(specfun::bessel_k0(x), oracle::ref_k0(x)));
            worst = worst.max(rel_diff(specfun::bessel_k1(x), oracle::ref_k1(x)));
        }
        rep.check("specfun_vs_oracle", worst, 1e-13);
    }

    // analytic tensors against finite-difference Hessians of the scalars
    let fd_pairs_plane = [
        (Vec3::new(0.2, -0.1, 0.8), Vec3::new(-0.5, 0.4, 1.7)),
        (Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.6, 0.3, 0.5)),
        (Vec3::new(1.0, 0.7, 2.4), Vec3::new(1.1, 0.6, 0.4)),
    ];
    {
        let mut worst: f64 = 0.0;
        for (ra, rb) in fd_pairs_plane {
            let fd = oracle::fd_mixed_hessian(|a, b| greens::gh_plane(a, b).unwrap().value, ra, rb, 4e-3, 4e-3, 2);
            worst = worst.max(tensor_rel_diff(&fd.t, &tensor::gh_tensor_plane(ra, rb).unwrap().t));
        }
        rep.check("tensor_fd_plane", worst, 1e-6);
    }
    {
        let d = 1.0;
        let pairs = [
            (Vec3::new(0.0, 0.1, 0.2), Vec3::new(0.5, -0.2, -0.15)), // series route
            (Vec3::new(0.2, 0.0, -0.1), Vec3::new(0.5, 0.6, 0.3)),
            (Vec3::new(0.0, 0.0, 0.1), Vec3::new(0.02, 0.01, -0.2)), // ladder route
        ];
        let mut worst: f64 = 0.0;
        for (ra, rb) in pairs {
            let fd = oracle::fd_mixed_hessian(
                |a, b| greens::gh_capacitor(a, b, d, &ctrl).unwrap().value,
                ra,
                rb,
                3e-3,
                3e-3,
                2,
            );
            worst = worst.max(tensor_rel_diff(&fd.t, &tensor::gh_tensor_capacitor(ra, rb, d, &ctrl).unwrap().t));
        }
        rep.check("tensor_fd_capacitor", worst, 1e-6);
    }
    {
        let a = 1.0;
        let pairs = [
            (Vec3::new(0.4, 0.1, 1.6), Vec3::new(-0.9, 0.8, 1.1)),
            (Vec3::new(0.0, 0.0, 1.3), Vec3::new(0.5, 0.0, 1.8)),
        ];
        let mut worst: f64 = 0.0;
        for (ra, rb) in pairs {
            let fd = oracle::fd_mixed_hessian(
                |x, y| greens::gh_sphere_grounded(x, y, a).unwrap().value,
                ra,
                rb,
                4e-3,
                4e-3,
                2,
            );
            worst = worst.max(tensor_rel_diff(&fd.t, &tensor::gh_tensor_sphere_grounded(ra, rb, a).unwrap().t));
            let fdi = oracle::fd_mixed_hessian(
                |x, y| greens::gh_sphere_isolated(x, y, a).unwrap().value,
                ra,
                rb,
                4e-3,
                4e-3,
                2,
            );
            worst = worst.max(tensor_rel_diff(&fdi.t, &tensor::gh_tensor_sphere_isolated(ra, rb, a).unwrap().t));
        }
        rep.check("tensor_fd_sphere", worst, 1e-6);
    }

    // channel sum against the single-expression total
    {
        let cases: [(Geometry, Vec3, Vec3); 4] = [
            (Plane, Vec3::new(0.1, 0.4, 0.9), Vec3::new(-0.7, 0.2, 1.8)),
            (Capacitor { d: 1.0 }, Vec3::new(0.0, 0.0, 0.2), Vec3::new(0.5, 0.4, -0.15)),
            (SphereGrounded { a: 1.0 }, Vec3::new(0.0, 0.2, 1.5), Vec3::new(1.1, -0.4, 1.2)),
            (SphereIsolated { a: 1.0 }, Vec3::new(0.0, 0.2, 1.5), Vec3::new(1.1, -0.4, 1.2)),
        ];
        let mut worst: f64 = 0.0;
        for (geom, ra, rb) in cases {
            let b = breakdown(&coupling, &geom, ra, rb, &ctrl).unwrap();
            let direct = crate::energies::total_energy_via_identity(&coupling, &geom, ra, rb, &ctrl).unwrap();
            let scale = b.e_london.abs().max(b.e_na1.abs()).max(b.e_na2.abs());
            worst = worst.max((b.e_total() - direct).abs() / scale);
        }
        rep.check("energy_identity", worst, 1e-9);
    }

    // plane: E_NA2 equals the London energy at the image separation
    {
        let mut worst: f64 = 0.0;
        for (ra, rb) in fd_pairs_plane {
            let b = breakdown(&coupling, &Plane, ra, rb, &ctrl).unwrap();
            let image = crate::energies::london_energy(&coupling, ra, rb.mirror_z()).unwrap();
            worst = worst.max(rel_diff(b.e_na2, image));
        }
        rep.check("plane_image_identity", worst, 1e-12);
    }

    // sphere colinear closed forms, both branches
    {
        use std::f64::consts::PI;
        let a = 1.0;
        let (ra_d, rb_d) = (1.8, 3.1);
        let mut worst: f64 = 0.0;
        let b = breakdown(&coupling, &SphereGrounded { a }, Vec3::new(0.0, 0.0, ra_d), Vec3::new(0.0, 0.0, rb_d), &ctrl)
            .unwrap();
        let q = ra_d * rb_d - a * a;
        worst = worst.max(rel_diff(b.e_na1, -a * ra_d * rb_d / (36.0 * PI * PI * (rb_d - ra_d).powi(3) * q.powi(3))));
        let num = 3.0 * a.powi(6) + 2.0 * a.powi(4) * ra_d * rb_d + a * a * (ra_d * rb_d).powi(2);
        worst = worst.max(rel_diff(b.e_na2, -num / (144.0 * PI * PI * q.powi(6))));
        let bo = breakdown(&coupling, &SphereGrounded { a }, Vec3::new(0.0, 0.0, ra_d), Vec3::new(0.0, 0.0, -rb_d), &ctrl)
            .unwrap();
        let qp = ra_d * rb_d + a * a;
        worst = worst.max(rel_diff(bo.e_na1, a * ra_d * rb_d / (36.0 * PI * PI * (rb_d + ra_d).powi(3) * qp.powi(3))));
        let num_o = 3.0 * a.powi(6) - 2.0 * a.powi(4) * ra_d * rb_d + a * a * (ra_d * rb_d).powi(2);
        worst = worst.max(rel_diff(bo.e_na2, -num_o / (144.0 * PI * PI * qp.powi(6))));
        rep.check("sphere_colinear_closed_forms", worst, 1e-10);
    }

    // Dirichlet boundary values: G = G0 + G_H vanishes approaching each
    // conductor (grounded geometries)
    {
        let mut worst: f64 = 0.0;
        let eps = 1e-10;
        let rp = Vec3::new(0.3, -0.2, 0.9);
        let r = Vec3::new(1.0, 0.5, eps);
        let g0 = greens::free_kernel(r, rp).unwrap();
        worst = worst.max((g0 + greens::gh_plane(r, rp).unwrap().value).abs() / g0);

        let d: f64 = 1.0;
        let rpc = Vec3::new(0.0, 0.0, 0.17);
        for plate in [-0.5 * d, 0.5 * d] {
            let rc = Vec3::new(0.4, 0.1, plate - plate.signum() * eps);
            let g0 = greens::free_kernel(rc, rpc).unwrap();
            let g = g0 + greens::gh_capacitor(rc, rpc, d, &ctrl).unwrap().value;
            worst = worst.max(g.abs() / g0);
        }

        let a = 2.0;
        let rps = Vec3::new(0.0, 1.0, 3.0);
        let rs = Vec3::new(a / 2f64.sqrt(), 0.0, a / 2f64.sqrt()) * (1.0 + 1e-10);
        let g0 = greens::free_kernel(rs, rps).unwrap();
        worst = worst.max((g0 + greens::gh_sphere_grounded(rs, rps, a).unwrap().value).abs() / g0);
        rep.check("dirichlet_boundary", worst, 1e-9);
    }

    // exchange symmetry of the scalar Green functions
    {
        let cases: [(Geometry, Vec3, Vec3); 4] = [
            (Plane, Vec3::new(0.2, -0.1, 0.8), Vec3::new(-0.5, 0.4, 1.7)),
            (Capacitor { d: 1.0 }, Vec3::new(0.0, 0.1, 0.2), Vec3::new(0.5, -0.3, -0.15)),
            (SphereGrounded { a: 1.0 }, Vec3::new(0.0, 0.0, 2.0), Vec3::new(1.5, 0.5, 1.0)),
            (SphereIsolated { a: 1.0 }, Vec3::new(0.0, 0.0, 2.0), Vec3::new(1.5, 0.5, 1.0)),
        ];
        let mut worst: f64 = 0.0;
        for (geom, ra, rb) in cases {
            let fwd = greens::gh_scalar(&geom, ra, rb, &ctrl).unwrap().value;
            let bwd = greens::gh_scalar(&geom, rb, ra, &ctrl).unwrap().value;
            worst = worst.max(rel_diff(fwd, bwd));
        }
        rep.check("green_symmetry", worst, 1e-12);
    }

    // harmonicity: seven-point Laplacian of G_H at interior points, scaled
    // by |G_H|/h^2
    {
        let h = 1e-3;
        let cases: [(Geometry, Vec3, Vec3); 3] = [
            (Plane, Vec3::new(0.1, 0.2, 0.9), Vec3::new(-0.4, 0.3, 1.2)),
            (Capacitor { d: 1.0 }, Vec3::new(0.0, 0.1, 0.15), Vec3::new(0.45, -0.2, -0.2)),
            (SphereGrounded { a: 1.0 }, Vec3::new(0.1, 0.2, 1.6), Vec3::new(-0.5, 0.3, 1.9)),
        ];
        let mut worst: f64 = 0.0;
        for (geom, ra, rb) in cases {
            let g = |r: Vec3| greens::gh_scalar(&geom, r, rb, &ctrl).unwrap().value;
            let center = g(ra);
            let mut lap = -6.0 * center;
            for i in 0..3 {
                lap += g(ra.with(i, ra.get(i) + h)) + g(ra.with(i, ra.get(i) - h));
            }
            lap /= h * h;
            worst = worst.max(lap.abs() / (center.abs() / (h * h)));
        }
        rep.check("harmonicity", worst, 1e-5);
    }

    // the two capacitor representations are the same function
    {
        let d = 2.0;
        let mut worst: f64 = 0.0;
        for s in [0.1 * d, 0.2 * d, 0.3 * d] {
            let ra = Vec3::new(0.0, 0.0, 0.31 * d);
            let rb = Vec3::new(s, 0.0, -0.17 * d);
            let series = greens::gh_capacitor(ra, rb, d, &ctrl).unwrap().value;
            let ladder = oracle::capacitor_image_ladder(ra, rb, d, 4000)
                - greens::free_kernel(ra, rb).unwrap();
            worst = worst.max(rel_diff(series, ladder));
        }
        rep.check("ladder_vs_series", worst, 1e-8);
    }

    // atom-surface closed form above the plane
    {
        use std::f64::consts::PI;
        let h = 0.8;
        let d2 = 0.6;
        let pol = AtomPolarization::isotropic(d2).unwrap();
        let e = crate::energies::atom_surface_energy(&pol, UnitMode::Reduced, &Plane, Vec3::new(0.0, 0.0, h), &ctrl)
            .unwrap();
        rep.check("atom_surface_plane", rel_diff(e, -d2 / (48.0 * PI * h.powi(3))), 1e-12);
    }

    if rep.all_passed {
        println!("verify: all checks passed");
    } else {
        println!("verify: FAILURES detected");
    }
    rep.all_passed
}

// ---------------------------------------------------------------------------
// Argument parsing and dispatch.
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(name = "dispersia", version, about = "Dispersion interactions of atom pairs near conductors")]
struct Cli {
    /// Run the internal consistency checks instead of any command.
    #[arg(long, global = true)]
    verify: bool,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Args)]
struct RunArgs {
    /// INI config file describing geometry, coupling, scan and numerics.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; overrides the [output] path in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
#[command(rename_all = "snake_case")]
enum Cmd {
    /// Energy channels for a pair above the grounded plane.
    PlaneScan(RunArgs),
    /// Energy channels and NA/London ratio across the capacitor gap.
    CapacitorRatio(RunArgs),
    /// Finite-difference forces on atom A in the capacitor.
    CapacitorForce(RunArgs),
    /// Transverse-pair forces near the sphere.
    SphereForce(RunArgs),
    /// Isolated against grounded sphere, colinear pair.
    SphereIsoVsGrounded(RunArgs),
    /// Isolated sphere radius swept toward the triple-dipole limit.
    AxilrodLimit(RunArgs),
    /// Run the internal consistency checks and report PASS/FAIL lines.
    Verify,
}

fn load_config(args: &RunArgs) -> Result<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", args.config.display())))?;
    let cfg = parse_config(&text)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out_path.clone())
        .ok_or_else(|| Error::Domain("no output path: pass --out or set path under [output]".into()))?;
    Ok((cfg, out))
}

fn dispatch(cmd: &Cmd) -> Result<ExitCode> {
    let run = |args: &RunArgs, op: fn(&RunConfig, &Path) -> Result<()>| -> Result<ExitCode> {
        let (cfg, out) = load_config(args)?;
        op(&cfg, &out)?;
        Ok(ExitCode::SUCCESS)
    };
    match cmd {
        Cmd::PlaneScan(args) => run(args, op_plane_scan),
        Cmd::CapacitorRatio(args) => run(args, op_capacitor_ratio),
        Cmd::CapacitorForce(args) => run(args, op_capacitor_force),
        Cmd::SphereForce(args) => run(args, op_sphere_force),
        Cmd::SphereIsoVsGrounded(args) => run(args, op_sphere_iso_vs_grounded),
        Cmd::AxilrodLimit(args) => run(args, op_axilrod_limit),
        Cmd::Verify => Ok(if run_verify() { ExitCode::SUCCESS } else { ExitCode::from(1) }),
    }
}

/// Parse the command line, run the requested command, and map error kinds to
/// the documented exit codes.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    if cli.verify {
        return if run_verify() { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }
    let Some(cmd) = &cli.cmd else {
        eprintln!("error: no command given; see `dispersia --help`");
        return ExitCode::from(2);
    };
    match dispatch(cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain(_) => ExitCode::from(2),
                Error::NonConvergence(_) => ExitCode::from(3),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const BASE_CONFIG: &str = "
[geometry]
kind = capacitor
d = 1 L

[coupling]
lambda = 1
units = reduced

[scan]
a_z = 0.15
b_z = -0.2
start = 0.5
stop = 5
count = 10

[numerics]
rel_tol = 1e-12

[output]
path = rows.csv
";

    #[test]
    fn config_round_trip() {
        let cfg = parse_config(BASE_CONFIG).unwrap();
        assert!(matches!(cfg.geometry, Geometry::Capacitor { d } if d == 1.0));
        assert_eq!(cfg.coupling.lambda_ab, 1.0);
        assert_eq!(cfg.atom_a.z, 0.15);
        assert_eq!(cfg.atom_b.z, -0.2);
        assert_eq!(cfg.count, 10);
        assert_eq!(cfg.spacing, Spacing::Linear);
        assert_eq!(cfg.out_path.as_deref(), Some(Path::new("rows.csv")));
    }

    #[test]
    fn config_unit_suffixes() {
        let cfg = parse_config(
            "[geometry]\nkind = sphere_grounded\na = 1000 nm\n[scan]\nstart = 1.5 um\nstop = 2um\ncount = 3\nr_ab = 2 L\n",
        )
        .unwrap();
        assert!(matches!(cfg.geometry, Geometry::SphereGrounded { a } if (a - 1e-6).abs() < 1e-18));
        assert_relative_eq!(cfg.start, 1.5e-6);
        assert_relative_eq!(cfg.stop, 2e-6);
        assert_eq!(cfg.pair_separation, Some(2.0));
    }

    #[test]
    fn config_rejects_unknown_and_malformed_input() {
        assert!(parse_config("[geometry]\nkind = plane\n[scan]\nstart=1\nstop=2\ncount=2\ntypo_key = 3\n").is_err());
        assert!(parse_config("[nosuch]\nx = 1\n").is_err());
        assert!(parse_config("key_without_section = 1\n").is_err());
        assert!(parse_config("[geometry]\nkind = dodecahedron\n[scan]\nstart=1\nstop=2\ncount=2\n").is_err());
        assert!(parse_config("[geometry]\nkind = plane\n[scan]\nstart = abc\nstop=2\ncount=2\n").is_err());
        assert!(parse_config("[geometry]\nkind = capacitor\n[scan]\nstart=1\nstop=2\ncount=2\n").is_err());
    }

    #[test]
    fn config_comments_and_case() {
        let cfg = parse_config(
            "# leading comment\n[GEOMETRY]\nKind = PLANE ; trailing\n[scan]\nSTART = 1 # mid\nstop = 2\ncount = 4\nspacing = LOG\n",
        )
        .unwrap();
        assert!(matches!(cfg.geometry, Geometry::Plane));
        assert_eq!(cfg.spacing, Spacing::Log);
        assert_eq!(cfg.sweep_values().unwrap().len(), 4);
    }

    #[test]
    fn scientific_format_matches_c_convention() {
        assert_eq!(fmt_sci(0.0, 12), "0.000000000000e+00");
        assert_eq!(fmt_sci(-0.0, 12), "0.000000000000e+00");
        assert_eq!(fmt_sci(1.0, 12), "1.000000000000e+00");
        assert_eq!(fmt_sci(1.5e-3, 12), "1.500000000000e-03");
        assert_eq!(fmt_sci(-2.25e10, 12), "-2.250000000000e+10");
        assert_eq!(fmt_sci(9.87654321e-120, 12), "9.876543210000e-120");
        assert_eq!(fmt_sci(1.0 / 3.0, 12), "3.333333333333e-01");
        assert_eq!(fmt_sci(1.0 / 3.0, 3), "3.333e-01");
    }

    #[test]
    fn csv_row_renders_empty_force_columns() {
        let row = CsvRow {
            param: 2.0,
            e_london: -1e-3,
            e_na1: 2e-4,
            e_na2: -1e-4,
            e_na_total: 1e-4,
            ratio: -0.1,
            f_na: None,
            terms_used: 42,
            converged: true,
        };
        let line = row.to_line(12);
        assert_eq!(line.split(',').count(), 11);
        assert!(line.contains(",,,,42,true"));
        let with_force = CsvRow { f_na: Some(Vec3::new(1.0, 0.0, -2.0)), ..row };
        assert!(with_force.to_line(12).contains("1.000000000000e+00,0.000000000000e+00,-2.000000000000e+00"));
    }

    #[test]
    fn config_optional_blocks() {
        let cfg = parse_config(
            "[geometry]\nkind = plane\n[coupling]\nd2_x = 0.5\nd2_z = 1.5\n[scan]\nstart = 1\nstop = 2\ncount = 2\nmode = translate_pair\n[output]\nprecision = 6\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, SweepMode::TranslatePair);
        assert_eq!(cfg.precision, 6);
        assert_eq!(cfg.polarization.d2, [0.5, 0.0, 1.5]);
        assert!(parse_config("[geometry]\nkind = plane\n[scan]\nstart=1\nstop=2\ncount=2\n[output]\nprecision = 0\n").is_err());
        assert!(parse_config("[geometry]\nkind = plane\n[scan]\nstart=1\nstop=2\ncount=2\nmode = teleport\n").is_err());
    }

    #[test]
    fn asym_force_matches_full_route_at_large_separation() {
        let mut cfg = parse_config(BASE_CONFIG).unwrap();
        cfg.atom_a = Vec3::new(0.0, 0.0, 0.0);
        cfg.atom_b = Vec3::new(0.0, 0.0, 0.0);
        let (ra, rb) = (Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0));
        let f_asym = asym_na_force(&cfg, ra, rb, 1.0).unwrap();
        let full = force_on_atom(
            AtomSelect::A,
            &cfg.coupling,
            &pair_with_pol(&cfg, ra, rb),
            &Geometry::Capacitor { d: 1.0 },
            &cfg.fd,
            &cfg.series,
        )
        .unwrap();
        assert_relative_eq!(f_asym.x, full.f_na.x, max_relative = 0.05);
        let f_lon = london_force_on_a(&cfg.coupling, ra, rb).unwrap();
        assert_relative_eq!(f_lon.x, full.f_london.x, max_relative = 1e-6);
        assert!(f_lon.x > 0.0, "London force on A points toward B (positive x here)");
    }

    #[test]
    fn log_spacing_validates_endpoints() {
        let mut cfg = parse_config(BASE_CONFIG).unwrap();
        cfg.spacing = Spacing::Log;
        cfg.start = -1.0;
        assert!(cfg.sweep_values().is_err());
    }

    #[test]
    fn asym_twin_path_keeps_directory() {
        let p = asym_twin_path(Path::new("/tmp/run/out.csv"));
        assert_eq!(p, Path::new("/tmp/run/out.asym.csv"));
    }

    #[test]
    fn verify_suite_passes() {
        assert!(run_verify());
    }

    #[test]
    fn fd_comparison_catches_a_planted_sign_error() {
        // sensitivity check on the verify machinery itself: flipping one
        // tensor entry must push the residual far past the tolerance
        let (ra, rb) = (Vec3::new(0.2, -0.1, 0.8), Vec3::new(-0.5, 0.4, 1.7));
        let fd = crate::oracle::fd_mixed_hessian(
            |a, b| crate::greens::gh_plane(a, b).unwrap().value,
            ra,
            rb,
            4e-3,
            4e-3,
            2,
        );
        let good = crate::tensor::gh_tensor_plane(ra, rb).unwrap().t;
        assert!(tensor_rel_diff(&fd.t, &good) <= 1e-6);
        let mut bad = good;
        bad[2][2] = -bad[2][2];
        assert!(tensor_rel_diff(&fd.t, &bad) > 1e-2, "a sign flip must be loud, not marginal");
    }
}
