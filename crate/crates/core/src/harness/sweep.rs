//! ε × level sweeps with limit and order fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Surface, SweepConfig};
use super::table::{f, opt, CsvRecord};
use super::HarnessError;
use crate::director::{make_normal_director, make_tilted_director, DirectorError, DirectorField, TangentField};
use crate::energy::{curvature_integrals, half_w_squared, q_epsilon, q_zero, EnergyBreakdown, EnergyError};
use crate::fit::{loglog_order, quadratic_limit, LimitFit, OrderFit};
use crate::gauss_graph::{
    current_pairings, f_y, graph_area, graph_energy, graph_faces, integrated_defect, GraphError,
};
use crate::mesh::{generate_primitive, TriMesh};
use crate::multilinear::{relative_residual, Vec3};
use crate::spectral::{FlattenedXi, SpectralBasis};
use crate::varifold::{mesh_size, RESIDUAL_FLOOR};

/// Version of the cell and level CSV layouts.
pub const SWEEP_SCHEMA_VERSION: u32 = 1;

/// Refinement level of the sweep with its `θ = ν` reference values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelResult {
    pub level: u32,
    pub h: f64,
    pub faces: usize,
    pub mesh_hash: String,
    pub area: f64,
    pub q0: f64,
    pub willmore_quarter: f64,
    pub total_gauss: f64,
    /// Discrete `½ ∫ |w|²`.
    pub half_w_discrete: f64,
    /// `(q0 − Q₀)/Q₀` against the smooth surface.
    pub q0_rel_error: f64,
}

/// Graph-side diagnostics of one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphDiagnostics {
    pub graph_area: f64,
    pub area_bound: f64,
    pub area_bound_holds: bool,
    pub jac_bound_violations: usize,
    pub graph_energy: f64,
    /// Relative residual between graph-side and direct bending energy.
    pub graph_energy_residual: f64,
    pub excluded_faces: usize,
    pub pair_phi_star: f64,
    pub pair_phi_wedge: f64,
    pub pair_phi_wedge_direct: f64,
    pub pair_ratio: f64,
    pub pair_ratio_holds: bool,
    pub defect_integral: f64,
    pub defect_32_integral: f64,
    pub max_defect: f64,
}

/// Spectral checks on randomly drawn faces of one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpotCheck {
    pub faces: usize,
    /// `max |u·A u − form_scale · f_y| / max(1, |u·A u|)`.
    pub max_form_residual: f64,
    /// `max |Σ (v⁰ᵢ·u)² − defect²|` and against `|π₀u|²`.
    pub max_pi0_residual: f64,
    pub min_growth_slack: f64,
}

/// One `(level, ε)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub level: u32,
    pub eps: f64,
    pub mesh_hash: String,
    /// `ok`, or the error that stopped the cell.
    pub status: String,
    /// The failure was a fold-over or other domain error.
    pub domain_error: bool,
    pub energy: Option<EnergyBreakdown>,
    pub graph: Option<GraphDiagnostics>,
    pub spot: Option<SpotCheck>,
}

impl CellResult {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// `ε → 0` limit fit against its oracles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitCheck {
    pub fit: Option<LimitFit>,
    pub analytic: f64,
    pub discrete: f64,
    pub rel_error_analytic: Option<f64>,
    pub rel_error_discrete: Option<f64>,
    pub pass: bool,
}

/// Decay order in ε of a cell quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderCheck {
    pub fit: Option<OrderFit>,
    pub min_order: f64,
    /// Every value is below the machine-zero floor, so there is nothing to decay.
    pub below_floor: bool,
    /// `None` when the tilt field is zero and the quantity does not decay.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiminfCheck {
    pub min_q_eps: f64,
    pub q0_finest: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepFits {
    pub finest_level: u32,
    /// `Q_ε → Q₀ + ½∫|w|²`.
    pub total_limit: LimitCheck,
    /// Tilt term alone `→ ½∫|w|²`.
    pub tilt_limit: LimitCheck,
    /// Order of `|q0(level) − Q₀|` in the mesh size.
    pub q0_order: Option<OrderFit>,
    pub pairing_order: OrderCheck,
    pub defect_order: OrderCheck,
    pub liminf: Option<LiminfCheck>,
    pub area_bound_all_cells: bool,
    pub jac_bound_all_faces: bool,
    pub excluded_faces_total: usize,
    pub failed_cells: usize,
}

/// Everything a sweep produces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub config: String,
    pub surface: Surface,
    pub field: String,
    pub levels: Vec<LevelResult>,
    pub cells: Vec<CellResult>,
    pub fits: SweepFits,
}

impl SweepReport {
    /// 0 when all cells ran and all checks pass, 2 on a failed cell, 1 on a failed check.
    pub fn exit_code(&self) -> i32 {
        if self.fits.failed_cells > 0 {
            if self.cells.iter().any(|c| c.domain_error) {
                2
            } else {
                1
            }
        } else if self.checks_pass() {
            0
        } else {
            1
        }
    }

    pub fn checks_pass(&self) -> bool {
        let f = &self.fits;
        f.total_limit.pass
            && f.tilt_limit.pass
            && f.pairing_order.pass != Some(false)
            && f.defect_order.pass != Some(false)
            && f.liminf.as_ref().is_some_and(|l| l.holds)
            && f.area_bound_all_cells
            && f.jac_bound_all_faces
            && f.excluded_faces_total == 0
    }
}

fn energy_error_is_domain(e: &EnergyError) -> bool {
    matches!(
        e,
        EnergyError::TiltFoldOver { .. } | EnergyError::Director(DirectorError::FaceFoldOver { .. } | DirectorError::VertexFoldOver { .. })
    )
}

fn spot_check(mesh: &TriMesh, field: &DirectorField, cfg: &SweepConfig, stream: u64) -> Result<SpotCheck, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let faces = graph_faces(mesh, field)?;
    let picks: Vec<usize> = (0..cfg.spot_checks.min(faces.len())).map(|_| rng.gen_range(0..faces.len())).collect();
    let mut out = SpotCheck { faces: picks.len(), max_form_residual: 0.0, max_pi0_residual: 0.0, min_growth_slack: f64::INFINITY };
    for &k in &picks {
        let (_, d, g) = &faces[k];
        let y = d.theta_bar;
        let basis = SpectralBasis::build(y)?;
        let xi1 = g.xi.part1.scale(1.0 / g.xi.part0.norm());
        let u = FlattenedXi::from_mat(&xi1).to_vec9();
        let uau = basis.quadratic(&u);
        let fy = f_y(&xi1, y).map_err(GraphError::from)?;
        out.max_form_residual = out.max_form_residual.max((uau - cfg.form_scale * fy).abs() / 1f64.max(uau.abs()));
        if let Ok(fast) = basis.norm_pi0_fast(&u) {
            let gram = basis.project_pi0(&u).norm_squared();
            let r = (fast - g.defect * g.defect).abs().max((fast - gram).abs());
            out.max_pi0_residual = out.max_pi0_residual.max(r);
        } else {
            out.max_pi0_residual = f64::INFINITY;
        }
        out.min_growth_slack = out.min_growth_slack.min(basis.growth_slack(&u));
    }
    if picks.is_empty() {
        out.min_growth_slack = 0.0;
    }
    Ok(out)
}

fn run_cell(mesh: &TriMesh, mesh_hash: &str, w: &[Vec3], level: u32, eps: f64, cfg: &SweepConfig, stream: u64) -> CellResult {
    let mut cell = CellResult {
        level,
        eps,
        mesh_hash: mesh_hash.to_string(),
        status: "ok".into(),
        domain_error: false,
        energy: None,
        graph: None,
        spot: None,
    };
    let field = match make_tilted_director(mesh, w, eps) {
        Ok(f) => f,
        Err(e) => {
            cell.domain_error = matches!(e, DirectorError::FaceFoldOver { .. } | DirectorError::VertexFoldOver { .. });
            cell.status = e.to_string();
            return cell;
        }
    };
    match q_epsilon(mesh, &field, eps) {
        Ok(e) => cell.energy = Some(e),
        Err(e) => {
            cell.domain_error = energy_error_is_domain(&e);
            cell.status = e.to_string();
            return cell;
        }
    }
    let graph = (|| -> Result<(GraphDiagnostics, SpotCheck), HarnessError> {
        let area = graph_area(mesh, &field)?;
        let ge = graph_energy(mesh, &field)?;
        let pairs = current_pairings(mesh, &field, &cfg.forms)?;
        let (d1, d32, dmax) = integrated_defect(mesh, &field)?;
        let bending = cell.energy.as_ref().map_or(0.0, |e| e.bending);
        let diag = GraphDiagnostics {
            graph_area: area.graph_area,
            area_bound: area.area_bound,
            area_bound_holds: area.area_bound_holds,
            jac_bound_violations: area.jac_bound_violations.len(),
            graph_energy: ge.energy,
            graph_energy_residual: relative_residual(ge.energy, bending),
            excluded_faces: ge.excluded_faces.len(),
            pair_phi_star: pairs.pair_phi_star,
            pair_phi_wedge: pairs.pair_phi_wedge,
            pair_phi_wedge_direct: pairs.pair_phi_wedge_direct,
            pair_ratio: pairs.ratio,
            pair_ratio_holds: pairs.ratio_holds,
            defect_integral: d1,
            defect_32_integral: d32,
            max_defect: dmax,
        };
        Ok((diag, spot_check(mesh, &field, cfg, stream)?))
    })();
    match graph {
        Ok((g, s)) => {
            cell.graph = Some(g);
            cell.spot = Some(s);
        }
        Err(e) => {
            cell.domain_error = e.is_domain();
            cell.status = e.to_string();
        }
    }
    cell
}

fn limit_check(eps: &[f64], values: &[f64], analytic: f64, discrete: f64, tol: f64) -> LimitCheck {
    let fit = quadratic_limit(eps, values);
    let rel = |target: f64| {
        fit.map(|l| if target != 0.0 { (l.limit - target) / target } else { l.limit })
    };
    let rel_error_analytic = rel(analytic);
    LimitCheck {
        fit,
        analytic,
        discrete,
        rel_error_analytic,
        rel_error_discrete: rel(discrete),
        pass: rel_error_analytic.is_some_and(|r| r.abs() <= tol),
    }
}

fn order_check(eps: &[f64], values: &[f64], min_order: f64, applicable: bool) -> OrderCheck {
    // The largest ε is dropped as pre-asymptotic.
    let skip = 1.min(eps.len().saturating_sub(2));
    let abs: Vec<f64> = values[skip..].iter().map(|v| v.abs()).collect();
    let below_floor = abs.iter().all(|&v| v <= RESIDUAL_FLOOR);
    let fit = if below_floor { None } else { loglog_order(&eps[skip..], &abs) };
    OrderCheck { fit, min_order, below_floor, pass: applicable.then(|| below_floor || fit.is_some_and(|f| f.order >= min_order)) }
}

/// Runs the sweep. Cells run in parallel; every reduction is order-independent.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport, HarnessError> {
    let meshes: Vec<(u32, TriMesh)> = cfg
        .levels
        .par_iter()
        .map(|&l| Ok((l, generate_primitive(cfg.surface.spec(l))?)))
        .collect::<Result<_, HarnessError>>()?;
    let hashes: Vec<String> = meshes.par_iter().map(|(_, m)| m.content_hash()).collect();
    let samples: Vec<Vec<Vec3>> = meshes.par_iter().map(|(_, m)| cfg.field.sample(m)).collect();

    let q0_analytic = cfg.surface.q_zero();
    let levels: Vec<LevelResult> = meshes
        .par_iter()
        .zip(&hashes)
        .zip(&samples)
        .map(|(((level, m), hash), w)| {
            let q0 = q_zero(m)?;
            let (willmore_quarter, total_gauss) = curvature_integrals(m)?;
            Ok(LevelResult {
                level: *level,
                h: mesh_size(m),
                faces: m.num_faces(),
                mesh_hash: hash.clone(),
                area: m.total_area(),
                q0,
                willmore_quarter,
                total_gauss,
                half_w_discrete: half_w_squared(m, w),
                q0_rel_error: (q0 - q0_analytic) / q0_analytic,
            })
        })
        .collect::<Result<_, EnergyError>>()?;

    let grid: Vec<(usize, usize)> = (0..meshes.len()).flat_map(|l| (0..cfg.eps.len()).map(move |e| (l, e))).collect();
    let cells: Vec<CellResult> = grid
        .par_iter()
        .enumerate()
        .map(|(stream, &(l, e))| run_cell(&meshes[l].1, &hashes[l], &samples[l], meshes[l].0, cfg.eps[e], cfg, stream as u64))
        .collect();

    let finest = levels.last().expect("at least one level");
    let fine_cells: Vec<&CellResult> = cells.iter().filter(|c| c.level == finest.level && c.ok()).collect();
    let eps: Vec<f64> = fine_cells.iter().map(|c| c.eps).collect();
    let energy = |k: fn(&EnergyBreakdown) -> f64| -> Vec<f64> { fine_cells.iter().map(|c| k(c.energy.as_ref().expect("ok cell"))).collect() };
    let graph = |k: fn(&GraphDiagnostics) -> f64| -> Vec<f64> { fine_cells.iter().map(|c| k(c.graph.as_ref().expect("ok cell"))).collect() };
    let half_w = cfg.surface.half_w_squared(cfg.field);
    let tilting = cfg.field != TangentField::Zero;

    let total_limit = limit_check(&eps, &energy(|e| e.total), q0_analytic + half_w, finest.q0 + finest.half_w_discrete, cfg.limit_tolerance);
    let tilt_limit = limit_check(&eps, &energy(|e| e.tilt), half_w, finest.half_w_discrete, cfg.limit_tolerance);
    let pairing_order = order_check(&eps, &graph(|g| g.pair_phi_wedge), cfg.min_order, tilting);
    let defect_order = order_check(&eps, &graph(|g| g.defect_integral), cfg.min_order, tilting);

    let skip = 1.min(levels.len().saturating_sub(2));
    let hs: Vec<f64> = levels[skip..].iter().map(|l| l.h).collect();
    let errs: Vec<f64> = levels[skip..].iter().map(|l| l.q0_rel_error).collect();
    let q0_order = loglog_order(&hs, &errs);

    let liminf = energy(|e| e.total).into_iter().reduce(f64::min).map(|min_q_eps| {
        let tolerance = cfg.liminf_tolerance * finest.q0.abs();
        LiminfCheck { min_q_eps, q0_finest: finest.q0, tolerance, holds: min_q_eps >= finest.q0 - tolerance }
    });

    let ok_graphs: Vec<&GraphDiagnostics> = cells.iter().filter_map(|c| c.graph.as_ref()).collect();
    let fits = SweepFits {
        finest_level: finest.level,
        total_limit,
        tilt_limit,
        q0_order,
        pairing_order,
        defect_order,
        liminf,
        area_bound_all_cells: ok_graphs.iter().all(|g| g.area_bound_holds),
        jac_bound_all_faces: ok_graphs.iter().all(|g| g.jac_bound_violations == 0),
        excluded_faces_total: ok_graphs.iter().map(|g| g.excluded_faces).sum(),
        failed_cells: cells.iter().filter(|c| !c.ok()).count(),
    };

    Ok(SweepReport {
        schema_version: SWEEP_SCHEMA_VERSION,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.canonical(),
        surface: cfg.surface,
        field: cfg.field.name().to_string(),
        levels,
        cells,
        fits,
    })
}

/// Normal-director reference for a single mesh, used by `energy`.
pub fn normal_breakdown(mesh: &TriMesh, eps: f64) -> Result<EnergyBreakdown, EnergyError> {
    q_epsilon(mesh, &make_normal_director(mesh), eps)
}

/// A cell row bound to its report, for the cells CSV.
pub struct CellRow<'a> {
    pub seed: u64,
    pub config_hash: &'a str,
    pub cell: &'a CellResult,
}

impl CsvRecord for CellRow<'_> {
    const TABLE: &'static str = "sweep_cells";
    const VERSION: u32 = SWEEP_SCHEMA_VERSION;
    const COLUMNS: &'static [&'static str] = &[
        "level", "eps", "status", "tilt", "bending", "total", "area", "willmore_quarter", "total_gauss",
        "graph_area", "area_bound", "area_bound_holds", "jac_bound_violations", "graph_energy",
        "graph_energy_residual", "excluded_faces", "pair_phi_star", "pair_phi_wedge", "pair_phi_wedge_direct",
        "pair_ratio", "pair_ratio_holds", "defect_integral", "defect_32_integral", "max_defect",
        "spot_faces", "spot_max_form_residual", "spot_max_pi0_residual", "spot_min_growth_slack",
        "seed", "mesh_hash", "config_hash",
    ];

    fn fields(&self) -> Vec<String> {
        let c = self.cell;
        let e = c.energy.as_ref();
        let g = c.graph.as_ref();
        let s = c.spot.as_ref();
        let b = |v: Option<bool>| v.map(|x| x.to_string()).unwrap_or_default();
        let n = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            c.level.to_string(),
            f(c.eps),
            c.status.clone(),
            opt(e.map(|e| e.tilt)),
            opt(e.map(|e| e.bending)),
            opt(e.map(|e| e.total)),
            opt(e.map(|e| e.area)),
            opt(e.map(|e| e.willmore_quarter)),
            opt(e.map(|e| e.total_gauss)),
            opt(g.map(|g| g.graph_area)),
            opt(g.map(|g| g.area_bound)),
            b(g.map(|g| g.area_bound_holds)),
            n(g.map(|g| g.jac_bound_violations)),
            opt(g.map(|g| g.graph_energy)),
            opt(g.map(|g| g.graph_energy_residual)),
            n(g.map(|g| g.excluded_faces)),
            opt(g.map(|g| g.pair_phi_star)),
            opt(g.map(|g| g.pair_phi_wedge)),
            opt(g.map(|g| g.pair_phi_wedge_direct)),
            opt(g.map(|g| g.pair_ratio)),
            b(g.map(|g| g.pair_ratio_holds)),
            opt(g.map(|g| g.defect_integral)),
            opt(g.map(|g| g.defect_32_integral)),
            opt(g.map(|g| g.max_defect)),
            n(s.map(|s| s.faces)),
            opt(s.map(|s| s.max_form_residual)),
            opt(s.map(|s| s.max_pi0_residual)),
            opt(s.map(|s| s.min_growth_slack)),
            self.seed.to_string(),
            c.mesh_hash.clone(),
            self.config_hash.to_string(),
        ]
    }
}

/// A level row bound to its report, for the levels CSV.
pub struct LevelRow<'a> {
    pub seed: u64,
    pub config_hash: &'a str,
    pub level: &'a LevelResult,
}

impl CsvRecord for LevelRow<'_> {
    const TABLE: &'static str = "sweep_levels";
    const VERSION: u32 = SWEEP_SCHEMA_VERSION;
    const COLUMNS: &'static [&'static str] = &[
        "level", "h", "faces", "area", "q0", "willmore_quarter", "total_gauss", "half_w_discrete", "q0_rel_error",
        "seed", "mesh_hash", "config_hash",
    ];

    fn fields(&self) -> Vec<String> {
        let l = self.level;
        vec![
            l.level.to_string(),
            f(l.h),
            l.faces.to_string(),
            f(l.area),
            f(l.q0),
            f(l.willmore_quarter),
            f(l.total_gauss),
            f(l.half_w_discrete),
            f(l.q0_rel_error),
            self.seed.to_string(),
            l.mesh_hash.clone(),
            self.config_hash.to_string(),
        ]
    }
}

impl SweepReport {
    pub fn cell_rows(&self) -> Vec<CellRow<'_>> {
        self.cells.iter().map(|cell| CellRow { seed: self.seed, config_hash: &self.config_hash, cell }).collect()
    }

    pub fn level_rows(&self) -> Vec<LevelRow<'_>> {
        self.levels.iter().map(|level| LevelRow { seed: self.seed, config_hash: &self.config_hash, level }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::table::to_csv_string;

    fn small(field: &str, extra: &str) -> SweepConfig {
        SweepConfig::parse(&format!("levels = 1, 2\neps = 0.2, 0.1, 0.05\nfield = {field}\nseed = 3\n{extra}")).unwrap()
    }

    #[test]
    fn zero_field_gives_constant_total() {
        let r = run_sweep(&small("zero", "")).unwrap();
        for lvl in &r.levels {
            let totals: Vec<u64> = r.cells.iter().filter(|c| c.level == lvl.level).map(|c| c.energy.unwrap().total.to_bits()).collect();
            assert!(totals.iter().all(|&t| t == lvl.q0.to_bits()), "{totals:?} vs {}", lvl.q0);
        }
        assert_eq!(r.fits.pairing_order.pass, None);
        assert_eq!(r.fits.failed_cells, 0);
    }

    #[test]
    fn cells_carry_their_provenance_and_csv_validates() {
        let cfg = small("e1", "");
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.cells.len(), 6);
        assert_eq!(r.config_hash, cfg.hash());
        for c in &r.cells {
            assert!(c.ok(), "{c:?}");
            let lvl = r.levels.iter().find(|l| l.level == c.level).unwrap();
            assert_eq!(c.mesh_hash, lvl.mesh_hash);
            let e = c.energy.unwrap();
            assert_eq!(e.total.to_bits(), (e.tilt + e.bending).to_bits());
            let s = c.spot.as_ref().unwrap();
            assert!(s.max_form_residual < 1e-9 && s.max_pi0_residual < 1e-10 && s.min_growth_slack >= -1e-12, "{s:?}");
        }
        let text = to_csv_string(&r.cell_rows()).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rd.headers().unwrap().len(), CellRow::COLUMNS.len() + 1);
        assert_eq!(rd.records().count(), 6);
        to_csv_string(&r.level_rows()).unwrap();
    }

    #[test]
    fn form_scale_only_moves_the_spot_check() {
        let base = run_sweep(&small("e1", "")).unwrap();
        let moved = run_sweep(&small("e1", "form_scale = 13")).unwrap();
        for (a, b) in base.cells.iter().zip(&moved.cells) {
            assert_eq!(a.energy, b.energy);
            assert_eq!(a.graph, b.graph);
            assert!(b.spot.as_ref().unwrap().max_form_residual > 1e-3);
        }
    }

    #[test]
    fn fold_over_is_recorded_and_the_sweep_continues() {
        let cfg = SweepConfig::parse("levels = 1\neps = 1e9, 0.1\nfield = swirl").unwrap();
        let r = run_sweep(&cfg).unwrap();
        assert!(!r.cells[0].ok() && r.cells[0].domain_error, "{:?}", r.cells[0]);
        assert!(r.cells[1].ok());
        assert_eq!(r.exit_code(), 2);
    }
}
