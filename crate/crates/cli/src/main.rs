use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use tiltbend::director::{all_face_data, fold_over_faces, tilted_values_unchecked, DirectorField};
use tiltbend::energy::{q_epsilon, tilt_density, tilt_normals};
use tiltbend::gauss_graph::graph_faces;
use tiltbend::harness::table::{f, opt};
use tiltbend::harness::{run_sweep, run_verify, write_csv, CsvRecord, DirectorSpec, HarnessError, SweepConfig};
use tiltbend::mesh::{generate_primitive, load_off_unchecked, save_off, PrimitiveSpec, TriMesh};
use tiltbend::multilinear::quadratic_form_q;

const EXIT_CHECK: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "tiltbend", version, about = "Director-tilt bending energies on closed triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an icosphere or a parametric torus as OFF plus a JSON sidecar.
    Meshgen {
        #[command(subcommand)]
        kind: MeshKind,
    },
    /// Evaluate Q_ε for a mesh and a director field; prints JSON.
    Energy {
        mesh: PathBuf,
        /// `normal`, `tilted:<field>[:<eps>,..]` or `file:<path>`.
        #[arg(long, default_value = "normal")]
        director: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Accept surfaces with boundary.
        #[arg(long)]
        allow_open: bool,
        /// Write per-face quantities to this CSV file.
        #[arg(long)]
        dump_faces: Option<PathBuf>,
    },
    /// Run an ε × level sweep from a key=value config file.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value = "sweep_out")]
        out: PathBuf,
    },
    /// Run the seeded identity battery; prints a JSON report.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MeshKind {
    Sphere {
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 4)]
        level: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Torus {
        #[arg(long = "R", default_value_t = std::f64::consts::SQRT_2)]
        major: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 64)]
        nu: usize,
        #[arg(long, default_value_t = 64)]
        nv: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn exit_for(e: &HarnessError) -> u8 {
    if e.is_domain() {
        EXIT_DOMAIN
    } else if e.is_input() {
        EXIT_INPUT
    } else {
        EXIT_CHECK
    }
}

fn meshgen(kind: MeshKind) -> Result<u8, HarnessError> {
    let (spec, out) = match kind {
        MeshKind::Sphere { r, level, out } => (PrimitiveSpec::Sphere { radius: r, level }, out),
        MeshKind::Torus { major, r, nu, nv, out } => {
            (PrimitiveSpec::Torus { major_radius: major, minor_radius: r, nu, nv }, out)
        }
    };
    let mesh = generate_primitive(spec)?;
    if let Some(path) = &out {
        save_off(&mesh, path)?;
    }
    println!("area = {}", mesh.total_area());
    println!("chi = {}", mesh.euler_characteristic());
    println!("volume = {}", mesh.signed_volume());
    println!("vertices = {}", mesh.num_vertices());
    println!("faces = {}", mesh.num_faces());
    Ok(0)
}

struct FaceDump {
    eps: f64,
    face: usize,
    area: f64,
    theta_dot_nu: f64,
    tilt_density: f64,
    lambda1: f64,
    lambda2: f64,
    q: f64,
    jac: Option<f64>,
    f_y: Option<f64>,
    defect: Option<f64>,
}

impl CsvRecord for FaceDump {
    const TABLE: &'static str = "energy_faces";
    const VERSION: u32 = 1;
    const COLUMNS: &'static [&'static str] =
        &["eps", "face", "area", "theta_dot_nu", "tilt_density", "lambda1", "lambda2", "q", "jac", "f_y", "defect"];

    fn fields(&self) -> Vec<String> {
        vec![
            f(self.eps),
            self.face.to_string(),
            f(self.area),
            f(self.theta_dot_nu),
            f(self.tilt_density),
            f(self.lambda1),
            f(self.lambda2),
            f(self.q),
            opt(self.jac),
            opt(self.f_y),
            opt(self.defect),
        ]
    }
}

fn face_rows(mesh: &TriMesh, field: &DirectorField, eps: f64) -> Result<Vec<FaceDump>, HarnessError> {
    let data = all_face_data(mesh, field)?;
    let normals = tilt_normals(mesh);
    // Graph data is optional: open patches or extreme tilts may fail its closed-form guard.
    let graph = graph_faces(mesh, field).ok();
    let rows: Vec<FaceDump> = data
        .iter()
        .enumerate()
        .map(|(face, (_, d))| {
            let g = graph.as_ref().map(|g| g[face].2);
            FaceDump {
                eps,
                face,
                area: mesh.face_area(face),
                theta_dot_nu: d.theta_bar.dot(mesh.face_normal(face)),
                tilt_density: tilt_density(d.theta_bar, normals[face]),
                lambda1: d.lambda1,
                lambda2: d.lambda2,
                q: quadratic_form_q(&d.l),
                jac: g.map(|g| g.jac),
                f_y: g.map(|g| g.f_y_value),
                defect: g.map(|g| g.defect),
            }
        })
        .collect();
    Ok(rows)
}

fn report_fold_over(mesh: &TriMesh, spec: &DirectorSpec, eps: f64, err: &HarnessError) {
    let faces: Vec<(usize, f64)> = match spec {
        DirectorSpec::Tilted(t, _) => fold_over_faces(mesh, &tilted_values_unchecked(mesh, &t.sample(mesh), eps)),
        _ => Vec::new(),
    };
    eprintln!("error: fold-over at eps = {eps}: {err}");
    if !faces.is_empty() {
        const SHOWN: usize = 64;
        let list: Vec<String> = faces.iter().take(SHOWN).map(|(face, _)| face.to_string()).collect();
        let more = if faces.len() > SHOWN { " ..." } else { "" };
        eprintln!("folded faces ({}): {}{more}", faces.len(), list.join(" "));
    }
}

fn energy(
    mesh_path: &Path,
    director: &str,
    eps: f64,
    allow_open: bool,
    dump: Option<&Path>,
) -> Result<u8, HarnessError> {
    let spec = DirectorSpec::parse(director)?;
    let mesh = load_off_unchecked(mesh_path)?;
    if allow_open {
        mesh.validate_open()?;
    } else {
        mesh.validate()?;
    }
    let eps_values = spec.eps_values(eps);
    let mut out = Vec::with_capacity(eps_values.len());
    let mut rows = Vec::new();
    for &e in &eps_values {
        let result = spec.build(&mesh, e).and_then(|field| {
            let breakdown = q_epsilon(&mesh, &field, e)?;
            if dump.is_some() {
                rows.extend(face_rows(&mesh, &field, e)?);
            }
            Ok(breakdown)
        });
        match result {
            Ok(b) => out.push(json!({ "eps": e, "energy": b })),
            Err(err) if err.is_domain() => {
                report_fold_over(&mesh, &spec, e, &err);
                return Ok(EXIT_DOMAIN);
            }
            Err(err) => return Err(err),
        }
    }
    if let Some(path) = dump {
        write_csv(fs::File::create(path).map_err(io_err(path))?, &rows)?;
    }
    let value = if out.len() == 1 { out.pop().expect("one entry")["energy"].take() } else { json!(out) };
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(0)
}

fn sweep(config: &Path, out: &Path) -> Result<u8, HarnessError> {
    let text = fs::read_to_string(config).map_err(io_err(config))?;
    let cfg = SweepConfig::parse(&text)?;
    let report = run_sweep(&cfg)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let json_path = out.join("sweep_report.json");
    fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n").map_err(io_err(&json_path))?;
    let cells_path = out.join("sweep_cells.csv");
    write_csv(fs::File::create(&cells_path).map_err(io_err(&cells_path))?, &report.cell_rows())?;
    let levels_path = out.join("sweep_levels.csv");
    write_csv(fs::File::create(&levels_path).map_err(io_err(&levels_path))?, &report.level_rows())?;

    let fits = &report.fits;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
    println!("config_hash = {}", report.config_hash);
    println!("cells = {} failed = {}", report.cells.len(), fits.failed_cells);
    println!("total_limit rel_error = {} pass = {}", show(fits.total_limit.rel_error_analytic), fits.total_limit.pass);
    println!("tilt_limit rel_error = {} pass = {}", show(fits.tilt_limit.rel_error_analytic), fits.tilt_limit.pass);
    println!("pairing_order = {} pass = {:?}", show(fits.pairing_order.fit.map(|f| f.order)), fits.pairing_order.pass);
    println!("defect_order = {} pass = {:?}", show(fits.defect_order.fit.map(|f| f.order)), fits.defect_order.pass);
    println!("liminf holds = {:?}", fits.liminf.as_ref().map(|l| l.holds));
    println!("area_bound_all_cells = {} jac_bound_all_faces = {}", fits.area_bound_all_cells, fits.jac_bound_all_faces);
    for c in report.cells.iter().filter(|c| !c.ok()) {
        eprintln!("cell level {} eps {}: {}", c.level, c.eps, c.status);
    }
    Ok(report.exit_code() as u8)
}

fn verify(seed: u64, trials: u64, out: Option<&Path>) -> Result<u8, HarnessError> {
    let report = run_verify(seed, trials);
    let text = report.to_json();
    if let Some(path) = out {
        fs::write(path, text.clone() + "\n").map_err(io_err(path))?;
    }
    println!("{text}");
    if report.passed {
        return Ok(0);
    }
    for s in report.identities.iter().filter(|s| s.failures > 0) {
        eprintln!("FAIL {}: {} of {} trials, max residual {:e}", s.name, s.failures, s.trials, s.max_residual);
        if let Some(first) = s.recorded.first() {
            eprintln!("  reproducer: {}", serde_json::to_string(&first.input)?);
        }
    }
    Ok(EXIT_CHECK)
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("TILTBEND_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("TILTBEND_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("TILTBEND_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match cli.command {
        Command::Meshgen { kind } => meshgen(kind),
        Command::Energy { mesh, director, eps, allow_open, dump_faces } => {
            energy(&mesh, &director, eps, allow_open, dump_faces.as_deref())
        }
        Command::Sweep { config, out } => sweep(&config, &out),
        Command::Verify { seed, trials, out } => verify(seed, trials, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
