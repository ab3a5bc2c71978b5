//! Command-line front end and file emission: flat key/value configuration
//! files, legacy ASCII VTK dumps, full-precision CSV output, convergence
//! tables, and the per-run manifest.
//!
//! # Configuration format
//!
//! Plain text, one `key = value` per line under `[section]` headers; `#`
//! starts a comment. Vectors are space-separated numbers. Sections and keys:
//!
//! ```text
//! [scenario]  name, iterations, mesh_level, out_dir (optional)
//! [domain]    min, max                        (each "x y")
//! [mesh]      h_max, h_cr, grading (optional, default 0.5)
//! [pff]       e_mod, nu_s, g_c, alpha_theta, alpha_b, kappa_reg, p0, theta0,
//!             eps (optional, default 2·h_cr), gamma (optional, default 100/h_cr²)
//! [solid]     e_mod, nu_s, alpha_theta, alpha_b, kappa_s, theta0, p0
//! [fluid]     rho, nu, alpha_theta, alpha_u, kappa_f, f_f, f_hat_dir,
//!             f_hat_amplitude, f_hat_center, f_hat_decay,
//!             f_theta_amplitude, f_theta_center, f_theta_decay
//! [schedule]  p_base, p_slope, theta, use_tfsi, couple_temperature
//! [cracks]    crack_0, centerline_0, crack_1, ... (each "ax ay bx by")
//! ```
//!
//! Unknown or duplicate keys are rejected with their line number. Omitting
//! `eps` selects the ε = 2·h_cr rule and is flagged in the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::cod::CodProfile;
use crate::driver::{
    run_coupled_with, EpsRule, FluidSpec, Gaussian, IterationRecord, ScenarioConfig, Schedule,
    Stage, Step,
};
use crate::fem::{lame_from_e_nu, Field};
use crate::geo::CrackGeometry;
use crate::mesh::{Rect, SizeSpec, Subdomain, TriMesh};
use crate::pff::{PffParams, PffState};
use crate::scalar::Real;
use crate::tfsi::{SolidParamsT, TfsiState};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key '{0}'")]
    MissingKey(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn syntax(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Syntax {
        line,
        message: message.into(),
    }
}

/// Raw `section.key -> (line, value)` map with consume-and-reject-leftovers
/// semantics, so every unknown key is reported with its line.
struct Keys {
    map: BTreeMap<String, (usize, String)>,
}

impl Keys {
    fn lex(text: &str) -> Result<Keys, ConfigError> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(line, "unterminated section header"))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| syntax(line, "expected 'key = value'"))?;
            if section.is_empty() {
                return Err(syntax(line, "key before any [section] header"));
            }
            let full = format!("{section}.{}", key.trim());
            if map
                .insert(full.clone(), (line, value.trim().to_string()))
                .is_some()
            {
                return Err(syntax(line, format!("duplicate key '{full}'")));
            }
        }
        Ok(Keys { map })
    }

    fn take(&mut self, key: &str) -> Result<(usize, String), ConfigError> {
        self.map
            .remove(key)
            .ok_or_else(|| ConfigError::MissingKey(key.into()))
    }

    fn take_opt(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn scalar(&mut self, key: &str) -> Result<f64, ConfigError> {
        let (line, v) = self.take(key)?;
        parse_scalar(line, key, &v)
    }

    fn scalar_opt(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take_opt(key) {
            Some((line, v)) => parse_scalar(line, key, &v).map(Some),
            None => Ok(None),
        }
    }

    fn usize(&mut self, key: &str) -> Result<usize, ConfigError> {
        let (line, v) = self.take(key)?;
        v.parse()
            .map_err(|_| syntax(line, format!("'{key}' expects an unsigned integer, got '{v}'")))
    }

    fn bool(&mut self, key: &str) -> Result<bool, ConfigError> {
        let (line, v) = self.take(key)?;
        match v.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(syntax(line, format!("'{key}' expects true or false, got '{v}'"))),
        }
    }

    fn pair(&mut self, key: &str) -> Result<[f64; 2], ConfigError> {
        let (line, v) = self.take(key)?;
        parse_numbers::<2>(line, key, &v)
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some((key, (line, _))) = self.map.into_iter().next() {
            return Err(syntax(line, format!("unknown key '{key}'")));
        }
        Ok(())
    }
}

fn parse_scalar(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse()
        .map_err(|_| syntax(line, format!("'{key}' expects a number, got '{v}'")))
}

fn parse_numbers<const N: usize>(line: usize, key: &str, v: &str) -> Result<[f64; N], ConfigError> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != N {
        return Err(syntax(
            line,
            format!("'{key}' expects {N} numbers, got {}", parts.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_scalar(line, key, p)?;
    }
    Ok(out)
}

/// Shortest decimal that parses back to the exact same binary value.
fn num<T: Real>(v: T) -> String {
    format!("{}", v.as_f64())
}

/// Writes a config back out in the documented format. The output parses to
/// an equal configuration.
pub fn serialize_config<T: Real>(cfg: &ScenarioConfig<T>) -> String {
    let mut s = String::new();
    let pair = |a: [T; 2]| format!("{} {}", num(a[0]), num(a[1]));
    let seg = |(a, b): ([T; 2], [T; 2])| format!("{} {}", pair(a), pair(b));

    writeln!(s, "[scenario]").unwrap();
    writeln!(s, "name = {}", cfg.name).unwrap();
    writeln!(s, "iterations = {}", cfg.n_iterations).unwrap();
    writeln!(s, "mesh_level = {}", cfg.mesh_level).unwrap();
    if let Some(dir) = &cfg.out_dir {
        writeln!(s, "out_dir = {}", dir.display()).unwrap();
    }

    writeln!(s, "\n[domain]").unwrap();
    writeln!(s, "min = {}", pair(cfg.domain.min)).unwrap();
    writeln!(s, "max = {}", pair(cfg.domain.max)).unwrap();

    writeln!(s, "\n[mesh]").unwrap();
    writeln!(s, "h_max = {}", num(cfg.sizes.h_max)).unwrap();
    writeln!(s, "h_cr = {}", num(cfg.sizes.h_cr)).unwrap();
    writeln!(s, "grading = {}", num(cfg.sizes.grading)).unwrap();

    writeln!(s, "\n[pff]").unwrap();
    writeln!(s, "e_mod = {}", num(cfg.pff.elastic.e_mod)).unwrap();
    writeln!(s, "nu_s = {}", num(cfg.pff.elastic.nu_s)).unwrap();
    writeln!(s, "g_c = {}", num(cfg.pff.g_c)).unwrap();
    writeln!(s, "alpha_theta = {}", num(cfg.pff.alpha_theta)).unwrap();
    writeln!(s, "alpha_b = {}", num(cfg.pff.alpha_b)).unwrap();
    writeln!(s, "kappa_reg = {}", num(cfg.pff.kappa_reg)).unwrap();
    writeln!(s, "p0 = {}", num(cfg.pff.p0)).unwrap();
    writeln!(s, "theta0 = {}", num(cfg.pff.theta0)).unwrap();
    if let EpsRule::Fixed(e) = cfg.eps_rule {
        writeln!(s, "eps = {}", num(e)).unwrap();
    }
    let derived_gamma = T::of(100.0) / (cfg.sizes.h_cr * cfg.sizes.h_cr);
    if cfg.pff.gamma != derived_gamma {
        writeln!(s, "gamma = {}", num(cfg.pff.gamma)).unwrap();
    }

    writeln!(s, "\n[solid]").unwrap();
    writeln!(s, "e_mod = {}", num(cfg.solid.elastic.e_mod)).unwrap();
    writeln!(s, "nu_s = {}", num(cfg.solid.elastic.nu_s)).unwrap();
    writeln!(s, "alpha_theta = {}", num(cfg.solid.alpha_theta)).unwrap();
    writeln!(s, "alpha_b = {}", num(cfg.solid.alpha_b)).unwrap();
    writeln!(s, "kappa_s = {}", num(cfg.solid.kappa_s)).unwrap();
    writeln!(s, "theta0 = {}", num(cfg.solid.theta0)).unwrap();
    writeln!(s, "p0 = {}", num(cfg.solid.p0)).unwrap();

    writeln!(s, "\n[fluid]").unwrap();
    writeln!(s, "rho = {}", num(cfg.fluid.rho)).unwrap();
    writeln!(s, "nu = {}", num(cfg.fluid.nu)).unwrap();
    writeln!(s, "alpha_theta = {}", num(cfg.fluid.alpha_theta)).unwrap();
    writeln!(s, "alpha_u = {}", num(cfg.fluid.alpha_u)).unwrap();
    writeln!(s, "kappa_f = {}", num(cfg.fluid.kappa_f)).unwrap();
    writeln!(s, "f_f = {}", pair(cfg.fluid.f_f)).unwrap();
    writeln!(s, "f_hat_dir = {}", pair(cfg.fluid.f_hat_dir)).unwrap();
    writeln!(s, "f_hat_amplitude = {}", num(cfg.fluid.f_hat.amplitude)).unwrap();
    writeln!(s, "f_hat_center = {}", pair(cfg.fluid.f_hat.center)).unwrap();
    writeln!(s, "f_hat_decay = {}", pair(cfg.fluid.f_hat.decay)).unwrap();
    writeln!(s, "f_theta_amplitude = {}", num(cfg.fluid.f_theta.amplitude)).unwrap();
    writeln!(s, "f_theta_center = {}", pair(cfg.fluid.f_theta.center)).unwrap();
    writeln!(s, "f_theta_decay = {}", pair(cfg.fluid.f_theta.decay)).unwrap();

    writeln!(s, "\n[schedule]").unwrap();
    writeln!(s, "p_base = {}", num(cfg.schedule.p_base)).unwrap();
    writeln!(s, "p_slope = {}", num(cfg.schedule.p_slope)).unwrap();
    writeln!(s, "theta = {}", num(cfg.schedule.theta)).unwrap();
    writeln!(s, "use_tfsi = {}", cfg.schedule.use_tfsi).unwrap();
    writeln!(s, "couple_temperature = {}", cfg.schedule.couple_temperature).unwrap();

    writeln!(s, "\n[cracks]").unwrap();
    for (i, &c) in cfg.initial_cracks.iter().enumerate() {
        writeln!(s, "crack_{i} = {}", seg(c)).unwrap();
    }
    for (i, &c) in cfg.centerlines.iter().enumerate() {
        writeln!(s, "centerline_{i} = {}", seg(c)).unwrap();
    }
    s
}

/// Parses a configuration file. Returns the config plus manifest notes for
/// defaulted values (currently the ε rule).
pub fn parse_config<T: Real>(path: &Path) -> Result<(ScenarioConfig<T>, Vec<String>), ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

/// [`parse_config`] on in-memory text.
pub fn parse_config_str<T: Real>(
    text: &str,
) -> Result<(ScenarioConfig<T>, Vec<String>), ConfigError> {
    let mut keys = Keys::lex(text)?;
    let mut notes = Vec::new();
    let t = T::of;

    let name = keys.take("scenario.name")?.1;
    let n_iterations = keys.usize("scenario.iterations")?;
    let mesh_level = keys.usize("scenario.mesh_level")?;
    let out_dir = keys.take_opt("scenario.out_dir").map(|(_, v)| PathBuf::from(v));

    let dmin = keys.pair("domain.min")?;
    let dmax = keys.pair("domain.max")?;
    let domain = Rect::new([t(dmin[0]), t(dmin[1])], [t(dmax[0]), t(dmax[1])]);

    let h_max = t(keys.scalar("mesh.h_max")?);
    let h_cr = t(keys.scalar("mesh.h_cr")?);
    let grading = keys.scalar_opt("mesh.grading")?;
    let mut sizes = SizeSpec::new(h_max, h_cr, Vec::new());
    if let Some(g) = grading {
        sizes.grading = t(g);
    }

    let pff_elastic = lame_from_e_nu(t(keys.scalar("pff.e_mod")?), t(keys.scalar("pff.nu_s")?))
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let pff = PffParams {
        elastic: pff_elastic,
        g_c: t(keys.scalar("pff.g_c")?),
        alpha_theta: t(keys.scalar("pff.alpha_theta")?),
        alpha_b: t(keys.scalar("pff.alpha_b")?),
        kappa_reg: t(keys.scalar("pff.kappa_reg")?),
        p0: t(keys.scalar("pff.p0")?),
        theta0: t(keys.scalar("pff.theta0")?),
        eps: T::zero(),
        gamma: T::zero(),
    };
    let eps_rule = match keys.scalar_opt("pff.eps")? {
        Some(e) => EpsRule::Fixed(t(e)),
        None => {
            notes.push(format!(
                "eps omitted: defaulted to the 2*h_cr rule ({})",
                num(t(2.0) * h_cr)
            ));
            EpsRule::TwiceCrackSize
        }
    };
    let gamma_override = keys.scalar_opt("pff.gamma")?;

    let solid_elastic = lame_from_e_nu(
        t(keys.scalar("solid.e_mod")?),
        t(keys.scalar("solid.nu_s")?),
    )
    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let solid = SolidParamsT {
        elastic: solid_elastic,
        alpha_theta: t(keys.scalar("solid.alpha_theta")?),
        alpha_b: t(keys.scalar("solid.alpha_b")?),
        kappa_s: t(keys.scalar("solid.kappa_s")?),
        theta0: t(keys.scalar("solid.theta0")?),
        p0: t(keys.scalar("solid.p0")?),
    };

    let tp = |a: [f64; 2]| [t(a[0]), t(a[1])];
    let fluid = FluidSpec {
        rho: t(keys.scalar("fluid.rho")?),
        nu: t(keys.scalar("fluid.nu")?),
        alpha_theta: t(keys.scalar("fluid.alpha_theta")?),
        alpha_u: t(keys.scalar("fluid.alpha_u")?),
        kappa_f: t(keys.scalar("fluid.kappa_f")?),
        f_f: tp(keys.pair("fluid.f_f")?),
        f_hat_dir: tp(keys.pair("fluid.f_hat_dir")?),
        f_hat: Gaussian {
            amplitude: t(keys.scalar("fluid.f_hat_amplitude")?),
            center: tp(keys.pair("fluid.f_hat_center")?),
            decay: tp(keys.pair("fluid.f_hat_decay")?),
        },
        f_theta: Gaussian {
            amplitude: t(keys.scalar("fluid.f_theta_amplitude")?),
            center: tp(keys.pair("fluid.f_theta_center")?),
            decay: tp(keys.pair("fluid.f_theta_decay")?),
        },
    };

    let schedule = Schedule {
        p_base: t(keys.scalar("schedule.p_base")?),
        p_slope: t(keys.scalar("schedule.p_slope")?),
        theta: t(keys.scalar("schedule.theta")?),
        use_tfsi: keys.bool("schedule.use_tfsi")?,
        couple_temperature: keys.bool("schedule.couple_temperature")?,
    };

    let mut segments = |prefix: &str| -> Result<Vec<([T; 2], [T; 2])>, ConfigError> {
        let mut out = Vec::new();
        for i in 0.. {
            let key = format!("cracks.{prefix}_{i}");
            match keys.take_opt(&key) {
                Some((line, v)) => {
                    let q = parse_numbers::<4>(line, &key, &v)?;
                    out.push(([t(q[0]), t(q[1])], [t(q[2]), t(q[3])]));
                }
                None => break,
            }
        }
        Ok(out)
    };
    let initial_cracks = segments("crack")?;
    let centerlines = segments("centerline")?;

    keys.finish()?;

    let mut cfg = ScenarioConfig {
        name,
        domain,
        sizes,
        pff,
        fluid,
        solid,
        schedule,
        n_iterations,
        initial_cracks,
        centerlines,
        eps_rule,
        mesh_level,
        out_dir,
    };
    cfg.rebuild();
    if let Some(g) = gamma_override {
        cfg.pff.gamma = t(g);
    }
    cfg.validate().map_err(ConfigError::Invalid)?;
    Ok((cfg, notes))
}

/// Fields written by [`emit_vtk`]; absent fields are emitted as zeros so the
/// array set is identical across iterations.
pub struct VtkFields<'a, T> {
    pub v: Option<&'a Field<T>>,
    pub u: Option<&'a Field<T>>,
    pub p: Option<&'a Field<T>>,
    pub theta: Option<&'a Field<T>>,
    pub phi: Option<&'a Field<T>>,
}

impl<T> Default for VtkFields<'_, T> {
    fn default() -> Self {
        VtkFields {
            v: None,
            u: None,
            p: None,
            theta: None,
            phi: None,
        }
    }
}

impl<'a, T> VtkFields<'a, T> {
    pub fn from_pff(state: &'a PffState<T>) -> Self {
        VtkFields {
            u: Some(&state.u),
            phi: Some(&state.phi),
            ..Default::default()
        }
    }

    pub fn with_tfsi(mut self, tfsi: &'a TfsiState<T>) -> Self {
        self.v = Some(&tfsi.v);
        self.p = Some(&tfsi.p);
        self.theta = Some(&tfsi.theta);
        self
    }
}

fn vertex_values<T: Real>(mesh: &TriMesh<T>, field: Option<&Field<T>>, comps: usize) -> Vec<f64> {
    let nv = mesh.n_vertices();
    let mut out = vec![0.0; nv * comps];
    if let Some(f) = field {
        debug_assert_eq!(f.space.components, comps);
        debug_assert_eq!(f.space.mesh.n_vertices(), nv);
        for v in 0..nv {
            for c in 0..comps {
                out[v * comps + c] = f.coeffs[f.space.dof(v, c)].as_f64();
            }
        }
    }
    out
}

/// Writes the mesh and point data as legacy ASCII VTK (unstructured grid,
/// arrays `v`, `u` as 3-vectors with zero z, `p`, `theta`, `phi` scalars).
pub fn emit_vtk<T: Real>(
    mesh: &TriMesh<T>,
    fields: &VtkFields<'_, T>,
    path: &Path,
) -> io::Result<()> {
    let nv = mesh.n_vertices();
    let nt = mesh.triangles.len();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("fracta fields\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {nv} double").unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{} {} 0", v[0].as_f64(), v[1].as_f64()).unwrap();
    }
    writeln!(s, "CELLS {nt} {}", 4 * nt).unwrap();
    for tri in &mesh.triangles {
        writeln!(s, "3 {} {} {}", tri[0], tri[1], tri[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        s.push_str("5\n");
    }
    writeln!(s, "POINT_DATA {nv}").unwrap();
    for (name, field) in [("v", fields.v), ("u", fields.u)] {
        let vals = vertex_values(mesh, field, 2);
        writeln!(s, "VECTORS {name} double").unwrap();
        for v in 0..nv {
            writeln!(s, "{} {} 0", vals[2 * v], vals[2 * v + 1]).unwrap();
        }
    }
    for (name, field) in [("p", fields.p), ("theta", fields.theta), ("phi", fields.phi)] {
        let vals = vertex_values(mesh, field, 1);
        writeln!(s, "SCALARS {name} double 1").unwrap();
        s.push_str("LOOKUP_TABLE default\n");
        for v in vals {
            writeln!(s, "{v}").unwrap();
        }
    }
    fs::write(path, s)
}

/// Plain-text mesh dump: vertex coordinates, then triangles with their
/// subdomain label.
pub fn write_mesh<T: Real>(mesh: &TriMesh<T>, path: &Path) -> io::Result<()> {
    let mut s = String::new();
    writeln!(s, "vertices {}", mesh.n_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{} {}", v[0].as_f64(), v[1].as_f64()).unwrap();
    }
    writeln!(s, "triangles {}", mesh.triangles.len()).unwrap();
    for (tri, label) in mesh.triangles.iter().zip(&mesh.tri_label) {
        let tag = match label {
            Subdomain::Fluid => "fluid",
            Subdomain::Solid => "solid",
        };
        writeln!(s, "{} {} {} {tag}", tri[0], tri[1], tri[2]).unwrap();
    }
    fs::write(path, s)
}

/// Per-station COD CSV: station coordinate, raw width, smoothed width.
pub fn write_cod_csv<T: Real>(profile: &CodProfile<T>, path: &Path) -> io::Result<()> {
    let mut s = String::from("station,raw,smoothed\n");
    for i in 0..profile.stations.len() {
        writeln!(
            s,
            "{},{},{}",
            profile.stations[i].as_f64(),
            profile.widths[i].as_f64(),
            profile.smoothed_widths[i].as_f64()
        )
        .unwrap();
    }
    fs::write(path, s)
}

/// Crack polygon dump: one row per vertex with its polygon index.
pub fn write_polygons<T: Real>(geometry: &CrackGeometry<T>, path: &Path) -> io::Result<()> {
    let mut s = String::from("polygon,vertex,x,y\n");
    for (p, poly) in geometry.polygons.iter().enumerate() {
        for (i, v) in poly.iter().enumerate() {
            writeln!(s, "{p},{i},{},{}", v[0].as_f64(), v[1].as_f64()).unwrap();
        }
    }
    fs::write(path, s)
}

const HISTORY_HEADER: &str =
    "n,tcv,center_cod,tip_left,tip_right,pff_iterations,tfsi_iterations,wall_seconds\n";

/// Appends one record to `history.csv`, writing the header on first use.
/// Values print with full round-trip precision.
pub fn append_history<T: Real>(record: &IterationRecord<T>, path: &Path) -> io::Result<()> {
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if file.metadata()?.len() == 0 {
        file.write_all(HISTORY_HEADER.as_bytes())?;
    }
    writeln!(
        file,
        "{},{},{},{},{},{},{},{}",
        record.n,
        record.tcv.as_f64(),
        record.center_cod.as_f64(),
        record.tips.0.as_f64(),
        record.tips.1.as_f64(),
        record.pff_iterations,
        record.tfsi_iterations,
        record.wall_seconds
    )
}

/// One line of a convergence study against a reference value.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvRow {
    pub level: usize,
    pub value: f64,
    pub error: f64,
    /// log2(err_k / err_{k+1}); `None` on the last row or when an error
    /// vanishes (rate undefined).
    pub rate: Option<f64>,
}

/// Errors and observed rates of `(level, value)` pairs against `reference`.
/// Levels must be given coarse to fine with uniform refinement between them.
pub fn convergence_table(
    levels: &[(usize, f64)],
    reference: f64,
) -> Result<Vec<ConvRow>, String> {
    if levels.len() < 3 {
        return Err(format!(
            "a convergence study needs at least 3 levels, got {}",
            levels.len()
        ));
    }
    let errs: Vec<f64> = levels.iter().map(|&(_, v)| (v - reference).abs()).collect();
    Ok(levels
        .iter()
        .enumerate()
        .map(|(k, &(level, value))| ConvRow {
            level,
            value,
            error: errs[k],
            rate: match errs.get(k + 1) {
                Some(&next) if errs[k] > 0.0 && next > 0.0 => Some((errs[k] / next).log2()),
                _ => None,
            },
        })
        .collect())
}

/// Writes a convergence table as CSV; undefined rates print empty.
pub fn write_convergence_csv(rows: &[ConvRow], path: &Path) -> io::Result<()> {
    let mut s = String::from("level,value,error,rate\n");
    for r in rows {
        let rate = r.rate.map(|x| x.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{},{rate}", r.level, r.value, r.error).unwrap();
    }
    fs::write(path, s)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Source revision for provenance; "unknown" outside a git checkout.
pub fn git_revision() -> String {
    Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// FNV-1a hash of the serialized configuration.
pub fn config_hash(serialized: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in serialized.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Provenance and artifact index of one run, written last.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub config_hash: String,
    pub revision: String,
    pub started_unix: u64,
    pub ended_unix: u64,
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl RunManifest {
    /// Writes the manifest after checking that every referenced file exists.
    pub fn write(&self, path: &Path) -> io::Result<()> {
        for f in &self.files {
            if !f.exists() {
                return Err(io::Error::new(
                    io::ErrorKind::NotFound,
                    format!("manifest references missing file {}", f.display()),
                ));
            }
        }
        let mut s = String::new();
        writeln!(s, "config_hash = {}", self.config_hash).unwrap();
        writeln!(s, "revision = {}", self.revision).unwrap();
        writeln!(s, "started_unix = {}", self.started_unix).unwrap();
        writeln!(s, "ended_unix = {}", self.ended_unix).unwrap();
        for n in &self.notes {
            writeln!(s, "note = {n}").unwrap();
        }
        for f in &self.files {
            writeln!(s, "file = {}", f.display()).unwrap();
        }
        fs::write(path, s)
    }
}

/// Driver sink writing the per-iteration artifact tree:
///
/// ```text
/// out/
///   config.cfg             input as parsed
///   history.csv            one row per iteration
///   init/fields.vtk, mesh.txt
///   iter_001/fields.vtk, mesh.txt, cod_0.csv, polygons.csv
///   ...
///   manifest.txt           written by finish()
/// ```
pub struct RunWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunWriter {
    pub fn new<T: Real>(dir: &Path, cfg: &ScenarioConfig<T>, notes: Vec<String>) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let serialized = serialize_config(cfg);
        let config_path = dir.join("config.cfg");
        fs::write(&config_path, &serialized)?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                config_hash: config_hash(&serialized),
                revision: git_revision(),
                started_unix: unix_now(),
                ended_unix: 0,
                files: vec![config_path],
                notes,
            },
        })
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.manifest.notes.push(note.into());
    }

    fn emit(&mut self, dir: &Path, name: &str, write: impl FnOnce(&Path) -> io::Result<()>) -> io::Result<()> {
        let path = dir.join(name);
        write(&path)?;
        self.manifest.files.push(path);
        Ok(())
    }

    pub fn handle<T: Real>(&mut self, stage: Stage<'_, T>) -> io::Result<()> {
        match stage {
            Stage::Init { mesh, state, .. } => {
                let dir = self.dir.join("init");
                fs::create_dir_all(&dir)?;
                let fields = VtkFields::from_pff(state);
                self.emit(&dir, "fields.vtk", |p| emit_vtk(mesh, &fields, p))?;
                self.emit(&dir, "mesh.txt", |p| write_mesh(mesh.as_ref(), p))
            }
            Stage::Iteration {
                record,
                profiles,
                geometry,
                mesh,
                tfsi,
                state,
            } => {
                let dir = self.dir.join(format!("iter_{:03}", record.n));
                fs::create_dir_all(&dir)?;
                let mut fields = VtkFields::from_pff(state);
                if let Some(ts) = tfsi {
                    fields = fields.with_tfsi(ts);
                }
                self.emit(&dir, "fields.vtk", |p| emit_vtk(mesh, &fields, p))?;
                self.emit(&dir, "mesh.txt", |p| write_mesh(mesh.as_ref(), p))?;
                for (i, profile) in profiles.iter().enumerate() {
                    self.emit(&dir, &format!("cod_{i}.csv"), |p| write_cod_csv(profile, p))?;
                }
                self.emit(&dir, "polygons.csv", |p| write_polygons(geometry, p))?;
                let history = self.dir.join("history.csv");
                append_history(record, &history)?;
                if record.n == 1 {
                    self.manifest.files.push(history);
                }
                Ok(())
            }
        }
    }

    /// Writes `manifest.txt` and returns the manifest.
    pub fn finish(mut self) -> io::Result<RunManifest> {
        self.manifest.ended_unix = unix_now();
        let path = self.dir.join("manifest.txt");
        self.manifest.write(&path)?;
        Ok(self.manifest)
    }
}

// ---- command line ----

/// Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 mesher
/// failure (1 for I/O failures outside those categories).
pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_MESHER: u8 = 4;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "fracta", about = "Coupled phase-field fracture / TFSI toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Overrides {
    /// Uniform refinement level (h_max and h_cr halve per level).
    #[arg(long)]
    mesh_level: Option<usize>,
    /// Number of coupling iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory for run artifacts.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Recorded in the manifest; the pipeline is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies the derived irreversibility penalty γ.
    #[arg(long)]
    gamma_scale: Option<f64>,
    /// Fixed regularization length ε (overrides the 2·h_cr rule).
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print (or write) a named preset configuration.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mesh-refinement study of a preset: levels 1..=L, finest as reference.
    Converge {
        preset: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a preset once per prescribed temperature value.
    SweepTemp {
        preset: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

impl Overrides {
    fn apply(&self, mut cfg: ScenarioConfig<f64>, notes: &mut Vec<String>) -> ScenarioConfig<f64> {
        if let Some(level) = self.mesh_level {
            cfg = cfg.with_mesh_level(level);
        }
        if let Some(n) = self.iterations {
            cfg.n_iterations = n;
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = Some(dir.clone());
        }
        if let Some(eps) = self.eps {
            cfg.eps_rule = EpsRule::Fixed(eps);
            cfg.pff.eps = eps;
        }
        if let Some(s) = self.gamma_scale {
            cfg.pff.gamma *= s;
            notes.push(format!("gamma scaled by {s}"));
        }
        if let Some(seed) = self.seed {
            notes.push(format!("seed = {seed} (run is deterministic)"));
        }
        cfg
    }
}

fn exit_for_step(step: Step) -> u8 {
    match step {
        Step::Init | Step::Geometry => EXIT_MESHER,
        Step::Cod | Step::Tfsi | Step::Pff => EXIT_SOLVER,
        Step::Output => EXIT_IO,
    }
}

fn run_to_dir(
    cfg: &ScenarioConfig<f64>,
    notes: Vec<String>,
) -> Result<Vec<IterationRecord<f64>>, (u8, String)> {
    let dir = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("out/{}", cfg.name)));
    let mut writer =
        RunWriter::new(&dir, cfg, notes).map_err(|e| (EXIT_IO, e.to_string()))?;
    let records = run_coupled_with(cfg, &mut |stage| writer.handle(stage))
        .map_err(|e| (exit_for_step(e.step), e.to_string()))?;
    writer.finish().map_err(|e| (EXIT_IO, e.to_string()))?;
    Ok(records)
}

fn preset_or_exit(name: &str) -> Result<ScenarioConfig<f64>, (u8, String)> {
    crate::driver::preset(name).map_err(|e| (EXIT_CONFIG, e.to_string()))
}

fn dispatch(cli: Cli) -> Result<(), (u8, String)> {
    match cli.cmd {
        Cmd::Run { config, overrides } => {
            let (cfg, mut notes) =
                parse_config::<f64>(&config).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
            let cfg = overrides.apply(cfg, &mut notes);
            let records = run_to_dir(&cfg, notes)?;
            for r in &records {
                println!(
                    "n={} tcv={} cod={} tips=({}, {})",
                    r.n, r.tcv, r.center_cod, r.tips.0, r.tips.1
                );
            }
            Ok(())
        }
        Cmd::Preset { name, out } => {
            let cfg = preset_or_exit(&name)?;
            let text = serialize_config(&cfg);
            match out {
                Some(path) => fs::write(path, text).map_err(|e| (EXIT_IO, e.to_string())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Cmd::Converge {
            preset,
            levels,
            overrides,
        } => {
            if levels < 4 {
                return Err((
                    EXIT_CONFIG,
                    "converge needs --levels >= 4 (3 rows plus the reference)".into(),
                ));
            }
            let base = preset_or_exit(&preset)?;
            let mut cods = Vec::new();
            let mut tcvs = Vec::new();
            for level in 1..=levels {
                let mut notes = Vec::new();
                let mut cfg = overrides.apply(base.clone(), &mut notes).with_mesh_level(level);
                cfg.n_iterations = 1;
                cfg.out_dir = overrides
                    .out_dir
                    .clone()
                    .unwrap_or_else(|| PathBuf::from(format!("out/{preset}-converge")))
                    .join(format!("level_{level}"))
                    .into();
                let records = run_to_dir(&cfg, notes)?;
                let r = &records[0];
                println!("level {level}: cod={} tcv={}", r.center_cod, r.tcv);
                cods.push((level, r.center_cod));
                tcvs.push((level, r.tcv));
            }
            let (ref_cod, ref_tcv) = (cods.pop().unwrap().1, tcvs.pop().unwrap().1);
            let dir = overrides
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("out/{preset}-converge")));
            for (tag, series, reference) in
                [("cod", &cods, ref_cod), ("tcv", &tcvs, ref_tcv)]
            {
                let rows =
                    convergence_table(series, reference).map_err(|m| (EXIT_CONFIG, m))?;
                for r in &rows {
                    let rate = r.rate.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
                    println!("{tag} level {}: err={:.3e} rate={rate}", r.level, r.error);
                }
                write_convergence_csv(&rows, &dir.join(format!("convergence_{tag}.csv")))
                    .map_err(|e| (EXIT_IO, e.to_string()))?;
            }
            Ok(())
        }
        Cmd::SweepTemp {
            preset,
            values,
            overrides,
        } => {
            let base = preset_or_exit(&preset)?;
            let dir = overrides
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("out/{preset}-sweep")));
            let mut s = String::from("theta,center_cod,tcv\n");
            for (i, &theta) in values.iter().enumerate() {
                let mut notes = Vec::new();
                let mut cfg = overrides.apply(base.clone(), &mut notes);
                cfg.schedule.theta = theta;
                cfg.n_iterations = 1;
                cfg.out_dir = Some(dir.join(format!("case_{i}")));
                let records = run_to_dir(&cfg, notes)?;
                let r = &records[0];
                println!("theta={theta}: cod={} tcv={}", r.center_cod, r.tcv);
                writeln!(s, "{theta},{},{}", r.center_cod, r.tcv).unwrap();
            }
            fs::create_dir_all(&dir).map_err(|e| (EXIT_IO, e.to_string()))?;
            fs::write(dir.join("sweep.csv"), s).map_err(|e| (EXIT_IO, e.to_string()))
        }
    }
}

/// Full CLI entry point; returns the process exit code. `FRACTA_THREADS`
/// caps the assembly thread pool.
pub fn run_cli<I, S>(args: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    if let Ok(n) = std::env::var("FRACTA_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            // ignore the error if a pool already exists (tests, repeat calls)
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successful exits
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err((code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}
