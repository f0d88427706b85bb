use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{ExperimentConfig, Mode};
use super::layout::{generate_layout, LayoutSpec};
use super::manifest::{MeshStats, RunManifest};
use super::Result;
use crate::expansion::{fine_solution, Expansion, ExpansionError, ExpansionOptions, Operators};
use crate::fem::{fmt_sig, norm_of, FeField, NormKind};
use crate::geometry::Geometry;
use crate::linalg::CgOptions;
use crate::localization::{compare_leading, delta_sweep, localized_u0, sweep_csv};
use crate::mesh::{generate_mesh, save_mesh, Mesh};
use crate::vtk::VtkWriter;

/// Geometry and mesh of a validated config, with its output directory created.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub geometry: Geometry,
    pub mesh: Arc<Mesh>,
    pub out: PathBuf,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<Self> {
        config.validate()?;
        let out = config.output.clone();
        std::fs::create_dir_all(&out)?;
        let geometry = manifest.time("geometry", || config.geometry())?;
        manifest.write(out.join("geometry.json"), geometry.to_json_string())?;
        let mesh = Arc::new(manifest.time("mesh", || generate_mesh(&geometry, config.h))?);
        manifest.mesh = Some(MeshStats::of(&mesh));
        Ok(Prepared { config: config.clone(), geometry, mesh, out })
    }

    fn cg(&self) -> CgOptions {
        CgOptions::default().with_tol(self.config.cg_tol)
    }

    fn expansion_options(&self) -> ExpansionOptions {
        ExpansionOptions {
            cg: self.cg(),
            source_every_step: self.config.source_every_step,
            max_terms: self.config.max_terms,
            norm: self.config.norm,
        }
    }

    fn operators(&self) -> Result<Arc<Operators>> {
        Ok(Arc::new(Operators::new(self.mesh.clone(), self.config.problem.f.clone(), self.cg())?))
    }

    fn expansion(&self, manifest: &mut RunManifest) -> Result<Expansion> {
        let ops = manifest.time("operators", || self.operators())?;
        let opts = self.expansion_options();
        Ok(manifest.time("leading term", || Expansion::new(ops, &self.config.problem.g, opts))?)
    }

    fn fine(&self, eta: f64, manifest: &mut RunManifest) -> Result<FeField> {
        let cache = self.out.join(format!("fine_{}_eta_{}.csv", &self.config.problem_hash()[..16], fmt_sig(eta)));
        if let Some(values) = read_field_csv(&cache, self.mesh.num_vertices()) {
            log::info!("reusing fine solution {}", cache.display());
            manifest.record(&cache);
            return Ok(FeField::new(self.mesh.clone(), values)?);
        }
        let p = &self.config.problem;
        let cg = self.cg().with_max_iter(200 * self.mesh.num_vertices().max(100));
        let u = manifest.time("fine solve", || fine_solution(&self.mesh, eta, &p.f, &p.g, &cg))?;
        manifest.write(&cache, u.to_csv())?;
        Ok(u)
    }

    fn vtk(&self, name: &str, fields: &[(&str, &[f64])], manifest: &mut RunManifest) -> Result<()> {
        let mut w = VtkWriter::new(&self.mesh, name);
        for (n, v) in fields {
            w = w.point_field(n, v);
        }
        manifest.write(self.out.join(format!("{name}.vtk")), w.render())
    }
}

/// Values column of a `vertex,x,y,value` file, if it exists with the expected length.
fn read_field_csv(path: &Path, n: usize) -> Option<Vec<f64>> {
    let text = std::fs::read_to_string(path).ok()?;
    let values: Option<Vec<f64>> =
        text.lines().skip(1).map(|l| l.rsplit(',').next().and_then(|v| v.parse().ok())).collect();
    values.filter(|v| v.len() == n)
}

/// Runs the mode of `config` and writes its outputs plus `manifest.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    let name = serde_json::to_value(config.mode)?.as_str().unwrap_or("run").to_string();
    let mut manifest = RunManifest::new(&name, Some(config.hash()));
    let p = Prepared::new(config, &mut manifest)?;
    manifest.write(p.out.join("config.json"), config.to_json_string())?;
    match config.mode {
        Mode::Fine => run_fine(&p, &mut manifest)?,
        Mode::Expand => run_expand(&p, &mut manifest)?,
        Mode::Localize => run_localize(&p, &mut manifest)?,
        Mode::SweepEta => run_sweep_eta(&p, &mut manifest)?,
        Mode::SweepDelta => run_sweep_delta(&p, &mut manifest)?,
        Mode::Compare => run_compare(&p, &mut manifest)?,
    }
    manifest.save(&p.out)?;
    Ok(manifest)
}

fn run_fine(p: &Prepared, manifest: &mut RunManifest) -> Result<()> {
    let u = p.fine(p.config.eta[0], manifest)?;
    p.vtk("fine", &[("u", u.values())], manifest)
}

fn run_expand(p: &Prepared, manifest: &mut RunManifest) -> Result<()> {
    let mut e = p.expansion(manifest)?;
    manifest.time("terms", || e.ensure_terms(p.config.terms + 1))?;
    for path in e.write_to(p.out.join("terms"))? {
        manifest.record(path);
    }
    let lt = e.leading();
    let uc = lt.coupled_part()?;
    p.vtk("leading", &[("u0", lt.u0.values()), ("u00", lt.u00.values()), ("uc", uc.values())], manifest)?;
    if !p.config.eta.is_empty() {
        let diags: Vec<_> = p.config.eta.iter().map(|&eta| e.decay_diagnostics(eta)).collect();
        manifest.write(p.out.join("decay.csv"), decay_csv(&diags))?;
    }
    Ok(())
}

fn run_localize(p: &Prepared, manifest: &mut RunManifest) -> Result<()> {
    let e = p.expansion(manifest)?;
    let ops = e.operators();
    let global = e.leading();
    let mut csv = String::from("delta,e_u0,e_u00,e_uc,max_chi_diff\n");
    for (k, &delta) in p.config.delta.iter().enumerate() {
        let local = manifest.time(&format!("localize delta={}", fmt_sig(delta)), || {
            localized_u0(ops, &p.geometry, delta, &p.config.problem.g, p.config.coupling, Some(global))
        })?;
        let err = compare_leading(global, &local, p.config.norm)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_sig(delta),
            fmt_sig(err.e_u0),
            fmt_sig(err.e_u00),
            fmt_sig(err.e_uc),
            fmt_sig(err.max_chi_diff)
        );
        if k == 0 {
            let diff: Vec<f64> = global.u0.values().iter().zip(local.u0_delta.values()).map(|(a, b)| a - b).collect();
            p.vtk(
                "localized",
                &[("u0", global.u0.values()), ("u0_delta", local.u0_delta.values()), ("difference", &diff)],
                manifest,
            )?;
        }
    }
    manifest.write(p.out.join("localize.csv"), csv)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EtaOutcome {
    Terms(usize),
    /// The series did not reach the tolerance within the term limit.
    Nonconvergent,
    Failed(String),
}

/// One row of a contrast sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaRow {
    pub eta: f64,
    pub outcome: EtaOutcome,
    pub rho: f64,
    pub r_squared: f64,
    pub exact: bool,
}

/// CSV `eta,terms_needed`; failed rows read `nonconvergent` or `error`.
pub fn eta_sweep_csv(rows: &[EtaRow]) -> String {
    let mut s = String::from("eta,terms_needed\n");
    for r in rows {
        let v = match &r.outcome {
            EtaOutcome::Terms(j) => j.to_string(),
            EtaOutcome::Nonconvergent => "nonconvergent".into(),
            EtaOutcome::Failed(_) => "error".into(),
        };
        let _ = writeln!(s, "{},{v}", fmt_sig(r.eta));
    }
    s
}

fn decay_csv(diags: &[crate::expansion::DecayDiagnostics]) -> String {
    let mut s = String::from("eta,rho,r_squared,exact\n");
    for d in diags {
        let _ = writeln!(s, "{},{},{},{}", fmt_sig(d.eta), fmt_sig(d.rho), fmt_sig(d.r_squared), d.exact);
    }
    s
}

fn run_sweep_eta(p: &Prepared, manifest: &mut RunManifest) -> Result<()> {
    let mut e = p.expansion(manifest)?;
    let mut rows = Vec::new();
    let mut diags = Vec::new();
    for &eta in &p.config.eta {
        let res = manifest.time(&format!("terms eta={}", fmt_sig(eta)), || e.terms_needed(eta, p.config.tol));
        let outcome = match res {
            Ok(j) => EtaOutcome::Terms(j),
            Err(err) => {
                manifest.warn(format!("eta = {eta}: {err}"));
                match err {
                    ExpansionError::NotConverged { .. } => EtaOutcome::Nonconvergent,
                    other => EtaOutcome::Failed(other.to_string()),
                }
            }
        };
        let d = e.decay_diagnostics(eta);
        rows.push(EtaRow { eta, outcome, rho: d.rho, r_squared: d.r_squared, exact: d.exact });
        diags.push(d);
    }
    manifest.write(p.out.join("sweep_eta.csv"), eta_sweep_csv(&rows))?;
    manifest.write(p.out.join("decay.csv"), decay_csv(&diags))
}

fn run_sweep_delta(p: &Prepared, manifest: &mut RunManifest) -> Result<()> {
    let e = p.expansion(manifest)?;
    let c = &p.config;
    let rows = manifest.time("delta sweep", || {
        delta_sweep(e.operators(), &p.geometry, e.leading(), &c.problem.g, &c.delta, c.coupling, c.norm)
    })?;
    for r in &rows {
        if let Err(msg) = &r.outcome {
            manifest.warn(format!("delta = {}: {msg}", r.delta));
        }
    }
    manifest.write(p.out.join("sweep_delta.csv"), sweep_csv(&rows))
}

/// `||u_eta - S_J|| / ||u_eta||` for `J = 0..=j_max`.
pub fn compare_rows(fine: &FeField, e: &mut Expansion, eta: f64, j_max: usize, kind: NormKind) -> Result<Vec<f64>> {
    e.ensure_terms(j_max + 1)?;
    let reference = norm_of(fine.mesh(), fine.values(), kind);
    (0..=j_max)
        .map(|j| {
            let d = fine.sub(&e.partial_sum(eta, j)?).map_err(ExpansionError::from)?;
            let n = norm_of(d.mesh(), d.values(), kind);
            Ok(if reference == 0.0 { n } else { n / reference })
        })
        .collect()
}

/// CSV `J,remainder`.
pub fn remainder_csv(rows: &[f64]) -> String {
    let mut s = String::from("J,remainder\n");
    for (j, r) in rows.iter().enumerate() {
        let _ = writeln!(s, "{j},{}", fmt_sig(*r));
    }
    s
}

fn run_compare(p: &Prepared, manifest: &mut RunManifest) -> Result<()> {
    let eta = p.config.eta[0];
    let fine = p.fine(eta, manifest)?;
    let mut e = p.expansion(manifest)?;
    let j_max = p.config.terms;
    let rows = manifest.time("remainders", || compare_rows(&fine, &mut e, eta, j_max, p.config.norm))?;
    manifest.write(p.out.join("compare.csv"), remainder_csv(&rows))?;
    let s = e.partial_sum(eta, j_max)?;
    p.vtk("compare", &[("fine", fine.values()), ("partial_sum", s.values())], manifest)
}

/// Writes `geometry.json` for a generated layout.
pub fn cmd_layout(spec: &LayoutSpec, out: impl AsRef<Path>) -> Result<RunManifest> {
    let out = out.as_ref();
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("layout", None);
    let geom = manifest.time("layout", || generate_layout(spec))?;
    manifest.write(out.join("geometry.json"), geom.to_json_string())?;
    manifest.write(out.join("layout.json"), serde_json::to_string_pretty(spec)? + "\n")?;
    manifest.save(out)?;
    Ok(manifest)
}

/// Meshes a geometry and writes the mesh file and a VTK view.
pub fn cmd_mesh(geom: &Geometry, h: f64, out: impl AsRef<Path>) -> Result<RunManifest> {
    let out = out.as_ref();
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("mesh", None);
    let mesh = manifest.time("mesh", || generate_mesh(geom, h))?;
    manifest.mesh = Some(MeshStats::of(&mesh));
    let path = out.join("mesh.txt");
    save_mesh(&mesh, &path)?;
    manifest.record(path);
    manifest.write(out.join("mesh.vtk"), VtkWriter::new(&mesh, "mesh").render())?;
    manifest.save(out)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{GeometrySource, LayoutParams, LayoutPattern};

    fn small(mode: Mode, out: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(
            GeometrySource::Layout(LayoutParams { n: 7, radius: 0.1, pattern: LayoutPattern::Rings }),
            0.045,
            mode,
        );
        c.output = out.to_path_buf();
        c.seed = 5;
        c
    }

    #[test]
    fn sweep_eta_outputs_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(Mode::SweepEta, &dir.path().join("a"));
        c.eta = vec![10.0, 1e4, 1e8];
        let m = run_experiment(&c).unwrap();
        let a = std::fs::read_to_string(dir.path().join("a/sweep_eta.csv")).unwrap();
        assert!(a.starts_with("eta,terms_needed\n10,"));
        assert_eq!(a.lines().count(), 4);
        assert!(m.artifacts.iter().all(|p| p.exists()));
        c.output = dir.path().join("b");
        run_experiment(&c).unwrap();
        assert_eq!(a, std::fs::read_to_string(dir.path().join("b/sweep_eta.csv")).unwrap());
    }

    #[test]
    fn compare_reuses_cached_fine_solution() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(Mode::Compare, dir.path());
        c.eta = vec![1e3];
        let first = run_experiment(&c).unwrap();
        assert!(first.phases.iter().any(|ph| ph.name == "fine solve"));
        let second = run_experiment(&c).unwrap();
        assert!(!second.phases.iter().any(|ph| ph.name == "fine solve"));
        let csv = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
        let r: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(r.len(), 3);
        assert!(r[1] <= r[0] && r[2] <= r[1] * 1.0001 + 1e-12, "{r:?}");
    }

    #[test]
    fn eta_csv_marks_failures() {
        let rows = [
            EtaRow { eta: 3.0, outcome: EtaOutcome::Nonconvergent, rho: 1.2, r_squared: 0.9, exact: false },
            EtaRow { eta: 10.0, outcome: EtaOutcome::Terms(7), rho: 0.3, r_squared: 0.99, exact: false },
        ];
        assert_eq!(eta_sweep_csv(&rows), "eta,terms_needed\n3,nonconvergent\n10,7\n");
    }
}
