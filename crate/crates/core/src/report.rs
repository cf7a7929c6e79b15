//! End-to-end runs: input → clustering → curves → tests → report bundle.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::{modularity, DetectorChoice};
use crate::error::{Error, Result};
use crate::fpca::{fpca_test, FpcaReport, DEFAULT_PVE};
use crate::generator::{generate, GeneratorSpec};
use crate::gp::{gp_test, GPOutcome};
use crate::graph::{load_edge_list, Graph, GraphSummary, IngestReport};
use crate::iwt::{iwt_test, Basis, Combine, IWTResult, DEFAULT_PERMUTATIONS};
use crate::partition::PartitionRecord;
use crate::pipeline::{reference_partition, run_pipeline_with_draws, CurveGrid, CurveSample, VICurveSet, Which};
use crate::plot::{curve_svg, pvalue_svg};
use crate::rewire::NullMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    EdgeList {
        path: PathBuf,
        #[serde(default)]
        delimiter: Option<char>,
    },
    Generator(GeneratorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestChoice {
    Gp,
    Fpca,
    Iwt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FpcaOptions {
    pub pve: f64,
    pub alpha: f64,
    pub perms: usize,
}

impl Default for FpcaOptions {
    fn default() -> Self {
        FpcaOptions {
            pve: DEFAULT_PVE,
            alpha: 0.05,
            perms: 9999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IwtOptions {
    pub perms: usize,
    pub basis: Basis,
    pub combine: Combine,
}

impl Default for IwtOptions {
    fn default() -> Self {
        IwtOptions {
            perms: DEFAULT_PERMUTATIONS,
            basis: Basis::Pointwise,
            combine: Combine::Sum,
        }
    }
}

fn default_null_draws() -> usize {
    1
}

fn default_tests() -> Vec<TestChoice> {
    vec![TestChoice::Gp, TestChoice::Fpca, TestChoice::Iwt]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSource,
    pub method: DetectorChoice,
    #[serde(default)]
    pub grid: CurveGrid,
    #[serde(default = "default_tests")]
    pub tests: Vec<TestChoice>,
    pub seed: u64,
    /// Independent null base graphs spread over the null replicates.
    #[serde(default = "default_null_draws")]
    pub null_draws: usize,
    /// Not part of the configuration hash.
    #[serde(default)]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub fpca: FpcaOptions,
    #[serde(default)]
    pub iwt: IwtOptions,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if let InputSource::Generator(spec) = &self.input {
            spec.validate()?;
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidInput("no tests selected".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form with the output directory blanked.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        canonical.tests.sort();
        canonical.tests.dedup();
        let bytes = serde_json::to_vec(&canonical).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub method: DetectorChoice,
    pub null_method: NullMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "Q")]
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub levels: Vec<f64>,
    pub replicates: usize,
    pub missing: usize,
    pub observed_means: Vec<f64>,
    pub null_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IwtSummary {
    pub components: usize,
    pub adjusted_p: Vec<f64>,
    pub sig_05_mask: Vec<bool>,
    pub sig_01_mask: Vec<bool>,
}

impl From<&IWTResult> for IwtSummary {
    fn from(r: &IWTResult) -> Self {
        IwtSummary {
            components: r.components,
            adjusted_p: r.adjusted_p.clone(),
            sig_05_mask: r.sig_05_mask.clone(),
            sig_01_mask: r.sig_01_mask.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub provenance: Provenance,
    pub graph: GraphSummary,
    pub ingest: Option<IngestReport>,
    pub planted_q: Option<f64>,
    pub reference: ReferenceSummary,
    pub curves: CurveSummary,
    pub gp: Option<GPOutcome>,
    pub fpca: Option<FpcaReport>,
    pub iwt: Option<IwtSummary>,
    pub artifacts: Vec<String>,
}

struct Bundle<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Bundle<'_> {
    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

/// Curve plot plus, when IWT results exist, the adjusted p-value plot.
pub fn render_plots(curves: &VICurveSet, iwt: Option<&IWTResult>) -> (String, Option<String>) {
    (curve_svg(curves), iwt.map(|r| pvalue_svg(&curves.grid.levels, r)))
}

/// Read a curve artifact, reporting absent fields as schema errors.
pub fn read_curves(path: &Path) -> Result<VICurveSet> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    VICurveSet::from_json(&s).map_err(|e| match e {
        Error::Json(j) => Error::Schema(j.to_string()),
        other => other,
    })
}

pub fn read_iwt(path: &Path) -> Result<IWTResult> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Schema(e.to_string()))
}

fn load_input(cfg: &RunConfig) -> Result<(Graph, Option<IngestReport>, Option<f64>, Option<PartitionRecord>)> {
    match &cfg.input {
        InputSource::EdgeList { path, delimiter } => {
            let (g, report) = load_edge_list(path, *delimiter)?;
            Ok((g, Some(report), None, None))
        }
        InputSource::Generator(spec) => {
            let lg = generate(spec)?;
            let rec = PartitionRecord::new(&lg.planted, Some(lg.achieved_q));
            Ok((lg.graph, None, Some(lg.achieved_q), Some(rec)))
        }
    }
}

/// Execute a full run, writing every artifact into `cfg.out_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut bundle = Bundle {
        dir: &cfg.out_dir,
        written: Vec::new(),
    };
    bundle.json("config.json", cfg)?;

    let (g, ingest, planted_q, planted) = load_input(cfg).map_err(|e| e.in_stage("input"))?;
    bundle.write("graph.txt", g.to_edge_list_string().as_bytes())?;
    if let Some(rec) = &planted {
        bundle.json("planted.json", rec)?;
    }

    let reference = reference_partition(&g, cfg.method, cfg.seed, Which::Observed);
    let q = modularity(&g, &reference).map_err(|e| e.in_stage("cluster"))?;
    bundle.json("partition.json", &PartitionRecord::new(&reference, Some(q)))?;

    let curves = run_pipeline_with_draws(&g, cfg.method, &cfg.grid, cfg.seed, cfg.null_draws).map_err(|e| e.in_stage("curve"))?;
    bundle.write("curves.json", format!("{}\n", curves.to_json()?).as_bytes())?;
    let mut csv = Vec::new();
    curves.write_csv(&mut csv).map_err(|e| Error::io(cfg.out_dir.join("curves.csv"), e))?;
    bundle.write("curves.csv", &csv)?;

    let observed = CurveSample::from_set(&curves, Which::Observed);
    let null = CurveSample::from_set(&curves, Which::Null);
    let wants = |t: TestChoice| cfg.tests.contains(&t);

    let gp = if wants(TestChoice::Gp) {
        let out = gp_test(&curves).map_err(|e| e.in_stage("gp"))?;
        bundle.json("gp.json", &out)?;
        Some(out)
    } else {
        None
    };
    let fpca = if wants(TestChoice::Fpca) {
        let o = &cfg.fpca;
        let out = fpca_test(&observed, &null, o.pve, o.alpha, o.perms, cfg.seed).map_err(|e| e.in_stage("fpca"))?;
        bundle.json("fpca.json", &out)?;
        Some(out)
    } else {
        None
    };
    let iwt = if wants(TestChoice::Iwt) {
        let o = &cfg.iwt;
        let out = iwt_test(&observed, &null, o.perms, cfg.seed, o.basis, o.combine).map_err(|e| e.in_stage("iwt"))?;
        bundle.json("iwt.json", &out)?;
        Some(out)
    } else {
        None
    };

    let (curve_plot, p_plot) = render_plots(&curves, iwt.as_ref());
    bundle.write("curves.svg", curve_plot.as_bytes())?;
    if let Some(svg) = p_plot {
        bundle.write("pvalues.svg", svg.as_bytes())?;
    }

    let mut artifacts = bundle.written.clone();
    artifacts.push("summary.json".to_string());
    let summary = RunSummary {
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            method: cfg.method,
            null_method: curves.null_method,
        },
        graph: g.summary(),
        ingest,
        planted_q,
        reference: ReferenceSummary {
            k: reference.community_count(),
            q,
        },
        curves: CurveSummary {
            levels: curves.grid.levels.clone(),
            replicates: curves.grid.replicates(),
            missing: curves.missing.len(),
            observed_means: curves.level_means(Which::Observed),
            null_means: curves.level_means(Which::Null),
        },
        gp,
        fpca,
        iwt: iwt.as_ref().map(IwtSummary::from),
        artifacts,
    };
    bundle.json("summary.json", &summary)?;
    Ok(summary)
}
