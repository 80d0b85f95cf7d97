//! Command-line surface: deterministic reports over fixtures and
//! presentation files, certificate emission, and certificate re-verification.
//!
//! Exit codes: 0 success, 1 mathematical obstruction or failed verification
//! (reported, not a crash), 2 input error.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bockstein::Bockstein;
use crate::cobar::TruncatedCobar;
use crate::corpus;
use crate::error::{Error, Result};
use crate::hopf::HahPresentation;
use crate::io as fio;
use crate::primitivization::{
    primitivize, trivialize_extension, verify_presentation, ExtensionProblem, PrimitivizationConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Text,
    Records,
}

#[derive(Debug, Parser)]
#[command(
    name = "hah",
    about = "Exact computations for graded chain Hopf algebras: homology, primitives, page analysis with witnesses, and constructive primitivization with certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct InputArgs {
    /// Presentation file (JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Built-in fixture name (ex1 ex2 b1 b2 b3 b4 demo3 torsion-pair).
    #[arg(long)]
    pub fixture: Option<String>,
    /// Prime p for fixtures.
    #[arg(long, default_value_t = 3)]
    pub prime: u32,
    /// Degree parameter n for fixtures that take one.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Degree cap for fixtures.
    #[arg(long, default_value_t = 20)]
    pub cap: usize,
}

impl InputArgs {
    fn load(&self) -> Result<Arc<HahPresentation>> {
        match (&self.input, &self.fixture) {
            (Some(path), None) => fio::parse_presentation(path),
            (None, Some(name)) => corpus::by_name(name, self.prime, self.n, self.cap),
            _ => Err(Error::Validation(
                "provide exactly one of --input or --fixture".into(),
            )),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the monomial basis in one degree.
    Basis {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Homology of the underlying complex in one degree.
    Homology {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Primitive subspace dimensions and representatives up to a degree.
    Primitives {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// The comparison map from homology-of-primitives to
    /// primitives-of-homology in one degree (mod-p presentations).
    Jmap {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Page dimensions and operator ranks of the mod-p page analysis.
    Bockstein {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        page_max: Option<u32>,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Trivialize the diagonal of the last generator over the preceding ones
    /// and emit the certificate.
    Trivialize {
        #[command(flatten)]
        input: InputArgs,
        /// Generator to trivialize (defaults to the last one).
        #[arg(long)]
        generator: Option<String>,
        /// Write the certificate JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Rewrite the whole presentation until every generator is primitive;
    /// emit the run certificate.
    Primitivize {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Verify a presentation or certificate file.
    Verify {
        /// File to verify (presentation or certificate JSON).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Compare the staged pipeline against the direct obstruction oracle on
    /// a seeded corpus.
    OracleCheck {
        #[arg(long, default_value_t = 3)]
        prime: u32,
        #[arg(long, default_value_t = 10)]
        cap: usize,
        #[arg(long, default_value_t = 8)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
}

/// Run with the given arguments, writing all output to `out`. Returns the
/// exit code.
pub fn run<W: Write>(args: &[String], out: &mut W) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(out, "{}", e);
            return 2;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code_for(&e);
            let _ = writeln!(out, "error: {}", e);
            code
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Obstructed(_)
        | Error::TheoryViolation(_)
        | Error::HypothesisFails(_)
        | Error::IterationBoundExceeded { .. }
        | Error::SolveFailed(_) => 1,
        _ => 2,
    }
}

fn dispatch<W: Write>(cmd: Command, out: &mut W) -> Result<i32> {
    match cmd {
        Command::Basis {
            input,
            degree,
            emit,
        } => {
            let h = input.load()?;
            let basis = h.algebra().enumerate_basis(degree)?;
            match emit {
                Emit::Records => {
                    for (i, m) in basis.iter().enumerate() {
                        writeln!(
                            out,
                            "record=basis degree={} index={} monomial={}",
                            degree,
                            i,
                            h.algebra().render_monomial(m)
                        )?;
                    }
                }
                Emit::Text => {
                    writeln!(out, "degree {}: dimension {}", degree, basis.len())?;
                    for m in &basis {
                        writeln!(out, "  {}", h.algebra().render_monomial(m))?;
                    }
                }
            }
            Ok(0)
        }
        Command::Homology {
            input,
            degree,
            emit,
        } => {
            let h = input.load()?;
            let cx = h.complex(1, degree + 1)?;
            let summary = cx.homology_at(degree)?;
            let torsion: Vec<String> = summary
                .torsion_orders()
                .iter()
                .map(|s| format!("p^{}", s))
                .collect();
            match emit {
                Emit::Records => {
                    writeln!(
                        out,
                        "record=homology degree={} free_rank={} torsion={}",
                        degree,
                        summary.free_rank,
                        if torsion.is_empty() {
                            "none".to_string()
                        } else {
                            torsion.join(",")
                        }
                    )?;
                }
                Emit::Text => {
                    writeln!(
                        out,
                        "H_{}: free rank {}, torsion [{}]",
                        degree,
                        summary.free_rank,
                        torsion.join(", ")
                    )?;
                }
            }
            Ok(0)
        }
        Command::Primitives {
            input,
            degree,
            emit,
        } => {
            let h = input.load()?;
            for n in 1..=degree {
                let p = h.primitives_at(n)?;
                match emit {
                    Emit::Records => {
                        writeln!(out, "record=primitives degree={} dim={}", n, p.dim())?;
                    }
                    Emit::Text => {
                        if p.dim() > 0 {
                            let reps: Vec<String> = p.basis.iter().map(|b| b.render()).collect();
                            writeln!(out, "P_{}: dim {} [{}]", n, p.dim(), reps.join(", "))?;
                        }
                    }
                }
            }
            Ok(0)
        }
        Command::Jmap {
            input,
            degree,
            emit,
        } => {
            let h = input.load()?;
            let j = h.j_map_at(degree)?;
            match emit {
                Emit::Records => {
                    writeln!(
                        out,
                        "record=jmap degree={} hpa_dim={} pha_dim={} kernel_dim={} cokernel_dim={} iso={}",
                        degree, j.hpa_dim, j.pha_dim, j.kernel_dim, j.cokernel_dim,
                        j.is_isomorphism()
                    )?;
                }
                Emit::Text => {
                    writeln!(
                        out,
                        "j in degree {}: H(PA) dim {}, PH(A) dim {}, kernel dim {}, cokernel dim {}{}",
                        degree,
                        j.hpa_dim,
                        j.pha_dim,
                        j.kernel_dim,
                        j.cokernel_dim,
                        if j.is_isomorphism() { " (isomorphism)" } else { "" }
                    )?;
                }
            }
            Ok(0)
        }
        Command::Bockstein {
            input,
            degree,
            page_max,
            emit,
        } => {
            let h = input.load()?;
            let cx = h.complex(1, degree + 1)?;
            let engine = Bockstein::new(cx)?;
            let (pages, ladder) = engine.pages(1..=degree, page_max)?;
            for page in &pages {
                for n in 1..=degree {
                    let dim = page.dim(n);
                    let beta_rank = page.beta_rank(n);
                    match emit {
                        Emit::Records => {
                            let beta = page
                                .beta
                                .get(&n)
                                .map(render_matrix)
                                .unwrap_or_else(|| "[]".to_string());
                            writeln!(
                                out,
                                "record=page r={} degree={} dim={} beta_rank={} beta={}",
                                page.r, n, dim, beta_rank, beta
                            )?;
                        }
                        Emit::Text => {
                            if dim > 0 {
                                writeln!(
                                    out,
                                    "page {} degree {}: dim {}, operator rank {}",
                                    page.r, n, dim, beta_rank
                                )?;
                            }
                        }
                    }
                }
            }
            if emit == Emit::Text {
                writeln!(out, "max torsion exponent: {}", ladder.max_exponent())?;
            }
            Ok(0)
        }
        Command::Trivialize {
            input,
            generator,
            out: out_path,
            emit,
        } => {
            let h = input.load()?;
            let gen_count = h.algebra().gen_count();
            if gen_count == 0 {
                return Err(Error::Validation("presentation has no generators".into()));
            }
            let gen = match generator {
                Some(name) => h
                    .algebra()
                    .gen_index(&name)
                    .ok_or_else(|| Error::Validation(format!("unknown generator `{}`", name)))?,
                None => gen_count - 1,
            };
            let base = crate::primitivization::prefix_hah(&h, gen)?;
            let spec = h.algebra().generators()[gen].clone();
            let b = h.differential().value(gen).restrict_to(base.algebra())?;
            let phi = crate::primitivization::restrict_tensor(
                h.diagonal_value(gen),
                base.tensor_square(),
            )?;
            let config = PrimitivizationConfig::for_presentation(&base);
            let problem = ExtensionProblem::new(Arc::clone(&base), spec, b, phi, None, None)?;
            let problem_copy = ExtensionProblem::new(
                Arc::clone(problem.base()),
                problem.generator().clone(),
                problem.boundary_value().clone(),
                problem.phi().clone(),
                Some(problem.coassoc_witness().clone()),
                Some(problem.cocomm_witness().clone()),
            )?;
            let iso = trivialize_extension(problem_copy, &config)?;
            let cert = fio::certificate_for(&problem, &iso);
            if let Some(path) = &out_path {
                std::fs::write(path, serde_json::to_string_pretty(&cert).unwrap())?;
            }
            match emit {
                Emit::Records => {
                    writeln!(
                        out,
                        "record=trivialize generator={} stop_page={} a={} psi={}",
                        cert.generator.name, cert.stop_page, cert.a, cert.psi
                    )?;
                    for r in &cert.residuals {
                        writeln!(out, "record=residual name={} pass={}", r.name, r.pass)?;
                    }
                }
                Emit::Text => {
                    writeln!(
                        out,
                        "trivialized `{}` at page {}: theta({}) = {} + ({})",
                        cert.generator.name,
                        cert.stop_page,
                        cert.generator.name,
                        cert.generator.name,
                        cert.a
                    )?;
                    writeln!(out, "homotopy: {}", cert.psi)?;
                    for r in &cert.residuals {
                        writeln!(
                            out,
                            "  check {}: {}",
                            r.name,
                            if r.pass { "pass" } else { "FAIL" }
                        )?;
                    }
                }
            }
            Ok(if cert.residuals.iter().all(|r| r.pass) {
                0
            } else {
                1
            })
        }
        Command::Primitivize {
            input,
            out: out_path,
            emit,
        } => {
            let h = input.load()?;
            let config = PrimitivizationConfig::for_presentation(&h);
            let run = primitivize(&h, &config)?;
            let cert = fio::primitivize_certificate(&h, &run);
            if let Some(path) = &out_path {
                std::fs::write(path, serde_json::to_string_pretty(&cert).unwrap())?;
            }
            match emit {
                Emit::Records => {
                    writeln!(out, "record=primitivize steps={}", cert.steps.len())?;
                    for s in &cert.steps {
                        writeln!(
                            out,
                            "record=step kind={} generator={} value={}",
                            s.step, s.generator, s.value
                        )?;
                    }
                    for r in &cert.residuals {
                        writeln!(out, "record=residual name={} pass={}", r.name, r.pass)?;
                    }
                }
                Emit::Text => {
                    writeln!(out, "primitivized in {} steps", cert.steps.len())?;
                    for s in &cert.steps {
                        writeln!(out, "  {} on `{}`: {}", s.step, s.generator, s.value)?;
                    }
                    for r in &cert.residuals {
                        writeln!(
                            out,
                            "  check {}: {}",
                            r.name,
                            if r.pass { "pass" } else { "FAIL" }
                        )?;
                    }
                }
            }
            Ok(if cert.residuals.iter().all(|r| r.pass) {
                0
            } else {
                1
            })
        }
        Command::Verify { input, emit } => {
            let text = std::fs::read_to_string(&input)?;
            let (kind, residuals) = fio::verify_any_str(&text)?;
            let all = residuals.iter().all(|r| r.pass);
            match emit {
                Emit::Records => {
                    writeln!(out, "record=verify kind={} pass={}", kind, all)?;
                    for r in &residuals {
                        writeln!(out, "record=residual name={} pass={}", r.name, r.pass)?;
                    }
                }
                Emit::Text => {
                    writeln!(
                        out,
                        "{}: {}",
                        kind,
                        if all { "all checks pass" } else { "FAILURES" }
                    )?;
                    for r in &residuals {
                        writeln!(
                            out,
                            "  check {}: {}",
                            r.name,
                            if r.pass { "pass" } else { "FAIL" }
                        )?;
                    }
                }
            }
            Ok(if all { 0 } else { 1 })
        }
        Command::OracleCheck {
            prime,
            cap,
            count,
            seed,
            emit,
        } => {
            let mut agree = 0u64;
            for k in 0..count {
                let inst = corpus::seeded_extension(prime, cap, seed.wrapping_add(k))?;
                let spec = crate::algebra::GeneratorSpec::new("x", inst.x_degree);
                let problem = ExtensionProblem::new(
                    Arc::clone(&inst.base),
                    spec,
                    inst.b.clone(),
                    inst.phi.clone(),
                    None,
                    None,
                )?;
                let config = PrimitivizationConfig::for_presentation(&inst.base);
                let staged = trivialize_extension(problem, &config);
                let cobar = TruncatedCobar::build(&inst.base, (inst.x_degree + 1).min(cap))?;
                let oracle = cobar.obstruction(&inst.phi)?;
                let staged_ok = staged.is_ok();
                let oracle_ok = oracle.is_zero();
                if staged_ok == oracle_ok {
                    agree += 1;
                }
                if emit == Emit::Records {
                    writeln!(
                        out,
                        "record=oracle_check instance={} staged={} oracle_zero={} twisted={}",
                        k, staged_ok, oracle_ok, inst.twisted
                    )?;
                }
            }
            writeln!(out, "staged == oracle on {}/{} instances", agree, count)?;
            Ok(if agree == count { 0 } else { 1 })
        }
    }
}

fn render_matrix(m: &crate::matrix::Mat) -> String {
    let mut rows = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| m.get(i, j).render()).collect();
        rows.push(format!("[{}]", row.join(",")));
    }
    format!("[{}]", rows.join(","))
}

/// Also verify a freshly constructed presentation report (used by tests).
pub fn verify_report_line(h: &HahPresentation) -> Result<String> {
    let report = verify_presentation(h)?;
    Ok(format!(
        "verify pass={} checks={}",
        report.all_pass(),
        report.checks.len()
    ))
}
