//! End-to-end generation: PRM, then skeleton and ground network, then data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cpd::{generate_cpds, Prm};
use crate::deps::{assign_slot_chains, generate_dependency_structure};
use crate::ground::{forward_sample, ground, Dataset};
use crate::io::{emit_csv, emit_sql, serialize_prm};
use crate::metrics::{count_contingencies, marginal_report, rbd_score, DirichletPrior, Penalty};
use crate::rng::{stage_stream, Stage};
use crate::schema::{generate_schema, validate_schema, GenerationPolicy};
use crate::skeleton::{generate_skeleton, validate_skeleton, CrpConfig, RelationalSkeleton};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Formats {
    pub sql: bool,
    pub csv: bool,
}

impl Formats {
    pub const SQL: Formats = Formats { sql: true, csv: false };
    pub const CSV: Formats = Formats { sql: false, csv: true };
    pub const BOTH: Formats = Formats { sql: true, csv: true };
}

impl std::str::FromStr for Formats {
    type Err = Error;

    /// Accepts `sql`, `csv`, `both`, or a comma-separated list of them.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Formats::default();
        for part in s.split(',').map(str::trim) {
            match part {
                "sql" => out.sql = true,
                "csv" => out.csv = true,
                "both" => out = Formats::BOTH,
                other => return Err(Error::invalid(format!("unknown format {other:?}"))),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub classes: usize,
    pub k_max: usize,
    /// CRP concentration.
    pub alpha: f64,
    pub objects: usize,
    pub seed: u64,
    /// Concentration of the symmetric Dirichlet the CPD rows are drawn from.
    pub dirichlet: f64,
    pub attr_lambda: f64,
    pub state_lambda: f64,
    pub out_dir: PathBuf,
    pub formats: Formats,
    /// Defaults to `<out_dir>/model.xml`.
    pub model_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            classes: 4,
            k_max: 3,
            alpha: 1.0,
            objects: 2500,
            seed: 0,
            dirichlet: 1.0,
            attr_lambda: 1.0,
            state_lambda: 1.0,
            out_dir: PathBuf::from("out"),
            formats: Formats::SQL,
            model_out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be a finite number > 0, got {v}")))
            }
        };
        if self.classes == 0 {
            return Err(Error::invalid("classes must be at least 1"));
        }
        if self.objects == 0 {
            return Err(Error::invalid("objects must be at least 1"));
        }
        positive("alpha", self.alpha)?;
        positive("dirichlet", self.dirichlet)?;
        positive("attr-lambda", self.attr_lambda)?;
        positive("state-lambda", self.state_lambda)?;
        if !self.formats.sql && !self.formats.csv {
            return Err(Error::invalid("no output format selected"));
        }
        Ok(())
    }

    pub fn policy(&self) -> GenerationPolicy {
        GenerationPolicy {
            attr_lambda: self.attr_lambda,
            state_lambda: self.state_lambda,
            ..GenerationPolicy::default()
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.model_out.clone().unwrap_or_else(|| self.out_dir.join("model.xml"))
    }
}

/// Everything produced by one run, held in memory.
#[derive(Debug, Clone)]
pub struct Generated {
    pub prm: Prm,
    pub skeleton: RelationalSkeleton,
    pub dataset: Dataset,
    pub ground_nodes: usize,
    pub ground_edges: usize,
}

/// Generates a random PRM of `cfg.classes` classes.
pub fn generate_prm(cfg: &RunConfig) -> Result<Prm> {
    cfg.validate()?;
    let policy = cfg.policy();
    let schema = generate_schema(cfg.classes, &policy, &mut stage_stream(cfg.seed, Stage::Schema))?;
    let report = validate_schema(&schema);
    if !report.is_empty() {
        return Err(Error::Invariant(format!("generated schema is invalid: {report}")));
    }
    let mut rng = stage_stream(cfg.seed, Stage::Dependencies);
    let bare = generate_dependency_structure(&schema, &policy, &mut rng)?;
    let mut structure = assign_slot_chains(&schema, &bare, cfg.k_max, &policy.aggregators, &mut rng)?;
    structure.canonicalize(&schema);
    generate_cpds(&schema, &structure, cfg.dirichlet, &mut stage_stream(cfg.seed, Stage::Parameters))
}

/// Runs all three steps without touching the file system.
pub fn generate(cfg: &RunConfig) -> Result<Generated> {
    let prm = generate_prm(cfg)?;
    let crp = CrpConfig {
        alpha: cfg.alpha,
        n_total: cfg.objects,
    };
    let skeleton = generate_skeleton(&prm.schema, &crp, &mut stage_stream(cfg.seed, Stage::Skeleton))?;
    let report = validate_skeleton(&skeleton, &prm.schema);
    if !report.is_empty() {
        return Err(Error::Invariant(format!("generated skeleton is invalid: {report}")));
    }
    let gbn = ground(&prm, &skeleton)?;
    let (ground_nodes, ground_edges) = (gbn.len(), gbn.edges().count());
    let dataset = forward_sample(&gbn, &mut stage_stream(cfg.seed, Stage::Sampling));
    Ok(Generated {
        prm,
        skeleton,
        dataset,
        ground_nodes,
        ground_edges,
    })
}

/// `key = value` summary of a run.
pub fn report(cfg: &RunConfig, g: &Generated) -> Result<String> {
    let schema = &g.prm.schema;
    let mut out = String::new();
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "classes = {}", schema.class_count());
    let _ = writeln!(out, "kmax = {}", g.prm.k_max);
    let _ = writeln!(out, "attributes = {}", schema.attribute_count());
    let _ = writeln!(out, "reference_slots = {}", schema.slots.len());
    let _ = writeln!(out, "dependencies = {}", g.prm.structure.dependencies.len());
    for d in &g.prm.structure.dependencies {
        let _ = writeln!(out, "dependency = {}", d.describe(schema));
    }
    let max_chain = g.prm.structure.dependencies.iter().map(|d| d.slot_chain.len()).max().unwrap_or(0);
    let _ = writeln!(out, "max_chain_length = {max_chain}");
    let _ = writeln!(out, "objects.requested = {}", cfg.objects);
    let _ = writeln!(out, "objects.total = {}", g.dataset.total_rows());
    for (c, class) in schema.classes.iter().enumerate() {
        let _ = writeln!(out, "objects.{} = {}", class.name, g.dataset.counts[c]);
    }
    let _ = writeln!(out, "skeleton_passes = {}", g.skeleton.passes.len());
    let _ = writeln!(out, "ground.nodes = {}", g.ground_nodes);
    let _ = writeln!(out, "ground.edges = {}", g.ground_edges);
    let _ = writeln!(out, "empty_aggregates = {}", g.dataset.empty_aggregates);
    let counts = count_contingencies(schema, &g.prm.structure, &g.skeleton, &g.dataset)?;
    let prior = DirichletPrior::symmetric(&counts, 1.0);
    let score = rbd_score(&g.prm.structure, &counts, &prior, Penalty::default())?;
    let _ = writeln!(out, "rbd_score = {score:.6}");
    out.push_str(&marginal_report(&g.prm, &g.skeleton, &g.dataset).render(schema));
    Ok(out)
}

/// Paths written by [`run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub model: PathBuf,
    pub sql: Option<PathBuf>,
    pub csv: Vec<PathBuf>,
    pub report: PathBuf,
    pub report_text: String,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Generates and writes the model document, data files and `report.txt`.
pub fn run(cfg: &RunConfig) -> Result<Written> {
    let g = generate(cfg)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let model = cfg.model_path();
    write_file(&model, &serialize_prm(&g.prm))?;
    let sql = if cfg.formats.sql {
        let path = cfg.out_dir.join("data.sql");
        write_file(&path, &emit_sql(&g.prm.schema, &g.dataset))?;
        Some(path)
    } else {
        None
    };
    let csv = if cfg.formats.csv {
        emit_csv(&g.prm.schema, &g.dataset, &cfg.out_dir)?
    } else {
        Vec::new()
    };
    let report_text = report(cfg, &g)?;
    let report_path = cfg.out_dir.join("report.txt");
    write_file(&report_path, &report_text)?;
    Ok(Written {
        model,
        sql,
        csv,
        report: report_path,
        report_text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_parse() {
        assert_eq!("sql".parse::<Formats>().unwrap(), Formats::SQL);
        assert_eq!("csv".parse::<Formats>().unwrap(), Formats::CSV);
        assert_eq!("both".parse::<Formats>().unwrap(), Formats::BOTH);
        assert_eq!("sql,csv".parse::<Formats>().unwrap(), Formats::BOTH);
        assert!("xml".parse::<Formats>().is_err());
    }

    #[test]
    fn zero_classes_rejected() {
        let cfg = RunConfig {
            classes: 0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = RunConfig {
            objects: 200,
            seed: 9,
            ..RunConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.prm, b.prm);
        assert_eq!(a.dataset, b.dataset);
    }
}
