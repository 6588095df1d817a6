//! Cross-dyad comparison of recorded sessions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::rank::median;
use super::spearman::spearman;
use super::wilcoxon::{rank_sum, wilcoxon_signed_rank};
use crate::error::{Error, Result};
use crate::session::{find_session_dirs, read_summary, LikertPair, SessionRecord, SessionSummary};
use crate::sonify::Condition;

pub const STUDY_CSV_HEADER: &str = "dyad_id,condition,delta_plv,plv_eyecontact,subj_pre,subj_post";

/// The per-dyad numbers the analysis consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadSummary {
    pub dyad_id: String,
    pub condition: Condition,
    pub delta_plv: f64,
    pub plv_eyecontact: f64,
    /// Participant A then B. Empty when questionnaires are missing.
    pub subjective: Vec<LikertPair>,
}

impl DyadSummary {
    /// `None` when the session never produced both phase PLVs.
    pub fn from_summary(s: &SessionSummary) -> Option<Self> {
        Some(Self {
            dyad_id: s.dyad_id.clone(),
            condition: s.condition,
            delta_plv: s.delta_plv?,
            plv_eyecontact: s.plv_eyecontact?,
            subjective: s.subjective.map(|sc| vec![sc.a, sc.b]).unwrap_or_default(),
        })
    }

    pub fn from_record(r: &SessionRecord) -> Option<Self> {
        Self::from_summary(&SessionSummary::of(r))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Also run the unpaired rank-sum variant of each between-condition comparison.
    pub rank_sum: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    SignedRank,
    RankSum,
}

impl std::fmt::Display for TestMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TestMethod::SignedRank => "signed-rank",
            TestMethod::RankSum => "rank-sum",
        })
    }
}

/// One Neuroadaptive-vs-Random comparison. Numeric fields are `None` when skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub method: TestMethod,
    /// Observations entering the test (non-zero pairs for signed-rank, n1 + n2 for rank-sum).
    pub n: usize,
    pub n_zero: usize,
    /// Observations left out because the groups differ in size (signed-rank only).
    pub n_unpaired: usize,
    /// W+ for signed-rank, U of the Neuroadaptive group for rank-sum.
    pub statistic: Option<f64>,
    pub z: Option<f64>,
    pub p_one_sided: Option<f64>,
    pub p_two_sided: Option<f64>,
    pub exact: Option<bool>,
    pub median_neuroadaptive: Option<f64>,
    pub median_random: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub name: String,
    pub condition: Condition,
    pub n: usize,
    pub rs: Option<f64>,
    pub p_two_sided: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMedians {
    pub condition: Condition,
    pub n_dyads: usize,
    pub delta_plv: Option<f64>,
    pub plv_eyecontact: Option<f64>,
    pub subjective_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub n_dyads: usize,
    pub n_neuroadaptive: usize,
    pub n_random: usize,
    /// Records dropped because they lack a baseline-corrected PLV.
    pub n_incomplete_excluded: usize,
    /// Dyads dropped from subjective analyses for missing questionnaires.
    pub n_subjective_excluded: usize,
    pub comparisons: Vec<Comparison>,
    pub correlations: Vec<Correlation>,
    pub medians: Vec<ConditionMedians>,
    pub notes: Vec<String>,
}

const ONE_SIDED_NOTE: &str = "One-sided p-values take the smaller tail; the directional hypothesis is \
Neuroadaptive > Random. Two-sided p = min(1, 2 x one-sided).";
const PAIRING_NOTE: &str = "Signed-rank comparisons pair the two conditions positionally after sorting each \
by dyad_id (participant A before B for subjective scores).";

pub fn analyze_study(records: &[SessionRecord], opts: AnalysisOptions) -> Result<StudyReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no session records".into()));
    }
    let dyads: Vec<DyadSummary> = records.iter().filter_map(DyadSummary::from_record).collect();
    Ok(build_report(dyads, records.len(), opts))
}

pub fn analyze_summaries(summaries: &[SessionSummary], opts: AnalysisOptions) -> Result<StudyReport> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput("no session summaries".into()));
    }
    let dyads: Vec<DyadSummary> = summaries.iter().filter_map(DyadSummary::from_summary).collect();
    Ok(build_report(dyads, summaries.len(), opts))
}

pub fn analyze_dyads(dyads: &[DyadSummary], opts: AnalysisOptions) -> Result<StudyReport> {
    if dyads.is_empty() {
        return Err(Error::EmptyInput("no dyads".into()));
    }
    Ok(build_report(dyads.to_vec(), dyads.len(), opts))
}

fn build_report(mut dyads: Vec<DyadSummary>, n_input: usize, opts: AnalysisOptions) -> StudyReport {
    dyads.sort_by(|a, b| a.dyad_id.cmp(&b.dyad_id));
    let by = |c: Condition| dyads.iter().filter(|d| d.condition == c).collect::<Vec<_>>();
    let neuro = by(Condition::Neuroadaptive);
    let random = by(Condition::Random);

    let delta = |g: &[&DyadSummary]| g.iter().map(|d| d.delta_plv).collect::<Vec<_>>();
    let changes = |g: &[&DyadSummary]| {
        g.iter()
            .filter(|d| !d.subjective.is_empty())
            .flat_map(|d| d.subjective.iter().map(|p| p.change() as f64))
            .collect::<Vec<_>>()
    };
    let n_subjective_excluded = dyads.iter().filter(|d| d.subjective.is_empty()).count();

    let mut comparisons = Vec::new();
    let mut methods = vec![TestMethod::SignedRank];
    if opts.rank_sum {
        methods.push(TestMethod::RankSum);
    }
    for (name, x, y) in [
        ("delta_plv", delta(&neuro), delta(&random)),
        ("subjective_change", changes(&neuro), changes(&random)),
    ] {
        for &m in &methods {
            comparisons.push(compare(name, m, &x, &y));
        }
    }

    let mut correlations = Vec::new();
    for (c, group) in [(Condition::Neuroadaptive, &neuro), (Condition::Random, &random)] {
        let mut post = Vec::new();
        let mut plv = Vec::new();
        for d in group.iter().filter(|d| !d.subjective.is_empty()) {
            for p in &d.subjective {
                post.push(p.post as f64);
                plv.push(d.plv_eyecontact);
            }
        }
        let mut entry = Correlation {
            name: "subjective_post_vs_plv_eyecontact".into(),
            condition: c,
            n: post.len(),
            rs: None,
            p_two_sided: None,
            skipped: None,
        };
        match spearman(&post, &plv) {
            Ok(t) => {
                entry.rs = Some(t.rs);
                entry.p_two_sided = Some(t.p_two_sided);
            }
            Err(e) => entry.skipped = Some(e.to_string()),
        }
        correlations.push(entry);
    }

    let medians = [(Condition::Neuroadaptive, &neuro), (Condition::Random, &random)]
        .into_iter()
        .map(|(c, g)| ConditionMedians {
            condition: c,
            n_dyads: g.len(),
            delta_plv: median(&delta(g)),
            plv_eyecontact: median(&g.iter().map(|d| d.plv_eyecontact).collect::<Vec<_>>()),
            subjective_change: median(&changes(g)),
        })
        .collect();

    let mut notes = vec![ONE_SIDED_NOTE.to_string(), PAIRING_NOTE.to_string()];
    if opts.rank_sum {
        notes.push("Rank-sum rows treat the conditions as independent samples; U is that of the Neuroadaptive group.".into());
    }
    notes.push("Correlations assign each dyad's eye-contact PLV to both members.".into());

    StudyReport {
        n_dyads: dyads.len(),
        n_neuroadaptive: neuro.len(),
        n_random: random.len(),
        n_incomplete_excluded: n_input - dyads.len(),
        n_subjective_excluded,
        comparisons,
        correlations,
        medians,
        notes,
    }
}

fn compare(name: &str, method: TestMethod, neuro: &[f64], random: &[f64]) -> Comparison {
    let mut c = Comparison {
        name: name.into(),
        method,
        n: 0,
        n_zero: 0,
        n_unpaired: 0,
        statistic: None,
        z: None,
        p_one_sided: None,
        p_two_sided: None,
        exact: None,
        median_neuroadaptive: median(neuro),
        median_random: median(random),
        skipped: None,
    };
    if neuro.is_empty() || random.is_empty() {
        c.skipped = Some(format!(
            "needs both conditions (neuroadaptive n = {}, random n = {})",
            neuro.len(),
            random.len()
        ));
        return c;
    }
    match method {
        TestMethod::SignedRank => {
            let m = neuro.len().min(random.len());
            c.n_unpaired = neuro.len() + random.len() - 2 * m;
            let diffs: Vec<f64> = neuro.iter().zip(random).map(|(a, b)| a - b).collect();
            match wilcoxon_signed_rank(&diffs) {
                Ok(t) => {
                    c.n = t.n;
                    c.n_zero = t.n_zero;
                    c.statistic = Some(t.w_plus);
                    c.z = Some(t.z);
                    c.p_one_sided = Some(t.p_one_sided);
                    c.p_two_sided = Some(t.p_two_sided);
                    c.exact = Some(t.exact);
                }
                Err(e) => {
                    c.n_zero = diffs.len();
                    c.skipped = Some(e.to_string());
                }
            }
        }
        TestMethod::RankSum => {
            c.n = neuro.len() + random.len();
            match rank_sum(neuro, random) {
                Ok(t) => {
                    c.statistic = Some(t.u);
                    c.z = Some(t.z);
                    c.p_one_sided = Some(t.p_one_sided);
                    c.p_two_sided = Some(t.p_two_sided);
                    c.exact = Some(t.exact);
                }
                Err(e) => c.skipped = Some(e.to_string()),
            }
        }
    }
    c
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

impl StudyReport {
    pub fn comparison(&self, name: &str, method: TestMethod) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.name == name && c.method == method)
    }

    pub fn medians_for(&self, condition: Condition) -> Option<&ConditionMedians> {
        self.medians.iter().find(|m| m.condition == condition)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Study report\n");
        let _ = writeln!(
            s,
            "Dyads analysed: {} ({} neuroadaptive, {} random). Excluded as incomplete: {}. \
             Excluded from subjective analyses: {}.\n",
            self.n_dyads, self.n_neuroadaptive, self.n_random, self.n_incomplete_excluded, self.n_subjective_excluded
        );
        let _ = writeln!(s, "## Medians\n");
        let _ = writeln!(s, "| condition | dyads | delta PLV | eye-contact PLV | subjective change |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for m in &self.medians {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                m.condition,
                m.n_dyads,
                fmt_opt(m.delta_plv, 2),
                fmt_opt(m.plv_eyecontact, 2),
                fmt_opt(m.subjective_change, 2)
            );
        }
        let _ = writeln!(s, "\n## Comparisons (neuroadaptive vs random)\n");
        let _ = writeln!(
            s,
            "| measure | test | n | zeros | statistic | Z | p (one-sided) | p (two-sided) | exact | Md neuroadaptive | Md random | note |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|---|---|");
        for c in &self.comparisons {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                c.name,
                c.method,
                c.n,
                c.n_zero,
                fmt_opt(c.statistic, 1),
                fmt_opt(c.z, 2),
                fmt_opt(c.p_one_sided, 3),
                fmt_opt(c.p_two_sided, 3),
                c.exact.map(|e| if e { "yes" } else { "no" }).unwrap_or("-"),
                fmt_opt(c.median_neuroadaptive, 2),
                fmt_opt(c.median_random, 2),
                c.skipped.as_deref().unwrap_or("")
            );
        }
        let _ = writeln!(s, "\n## Correlations\n");
        let _ = writeln!(s, "| measure | condition | n | rs | p (two-sided) | note |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for c in &self.correlations {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} |",
                c.name,
                c.condition,
                c.n,
                fmt_opt(c.rs, 2),
                fmt_opt(c.p_two_sided, 3),
                c.skipped.as_deref().unwrap_or("")
            );
        }
        let _ = writeln!(s);
        for n in &self.notes {
            let _ = writeln!(s, "_{n}_\n");
        }
        s
    }
}

/// Dyads that loaded, plus a warning per input that did not.
#[derive(Debug, Default)]
pub struct LoadedStudy {
    pub dyads: Vec<DyadSummary>,
    /// Readable sessions without a baseline-corrected PLV.
    pub n_incomplete: usize,
    pub warnings: Vec<String>,
}

impl LoadedStudy {
    pub fn analyze(&self, opts: AnalysisOptions) -> Result<StudyReport> {
        if self.dyads.is_empty() {
            return Err(Error::EmptyInput("no analysable sessions found".into()));
        }
        Ok(build_report(self.dyads.clone(), self.dyads.len() + self.n_incomplete, opts))
    }
}

/// Loads session directories (searched recursively) and flat CSV files.
///
/// Unreadable sessions are skipped with a warning; malformed CSV files are
/// an error.
pub fn load_study_inputs(paths: &[PathBuf]) -> Result<LoadedStudy> {
    let mut out = LoadedStudy::default();
    for path in paths {
        if path.is_file() {
            let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            out.dyads.extend(read_study_csv(std::io::BufReader::new(f))?);
            continue;
        }
        if !path.is_dir() {
            return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory")));
        }
        for dir in find_session_dirs(path)? {
            match read_summary(&dir) {
                Ok(s) => match DyadSummary::from_summary(&s) {
                    Some(d) => out.dyads.push(d),
                    None => {
                        out.n_incomplete += 1;
                        out.warnings.push(format!(
                            "{}: incomplete session ({}), skipped",
                            dir.display(),
                            s.incomplete_reason.as_deref().unwrap_or("no baseline-corrected PLV")
                        ))
                    }
                },
                Err(e) => out.warnings.push(format!("{}: {e}, skipped", dir.join("summary.json").display())),
            }
        }
    }
    Ok(out)
}

/// Writes one row per participant; dyads without questionnaires get one row
/// with empty score fields.
pub fn write_study_csv<W: Write>(mut w: W, dyads: &[DyadSummary]) -> Result<()> {
    let io = |e| Error::io("<study csv>", e);
    writeln!(w, "{STUDY_CSV_HEADER}").map_err(io)?;
    for d in dyads {
        if d.subjective.is_empty() {
            writeln!(w, "{},{},{:?},{:?},,", d.dyad_id, d.condition, d.delta_plv, d.plv_eyecontact).map_err(io)?;
        }
        for p in &d.subjective {
            writeln!(
                w,
                "{},{},{:?},{:?},{},{}",
                d.dyad_id, d.condition, d.delta_plv, d.plv_eyecontact, p.pre, p.post
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Reads the flat per-participant CSV, grouping rows by `dyad_id`.
pub fn read_study_csv<R: BufRead>(r: R) -> Result<Vec<DyadSummary>> {
    let mut dyads: BTreeMap<String, DyadSummary> = BTreeMap::new();
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == STUDY_CSV_HEADER => {}
        Some((_, Ok(h))) => {
            return Err(Error::Format {
                line: 1,
                message: format!("expected header `{STUDY_CSV_HEADER}`, found `{}`", h.trim()),
            })
        }
        Some((_, Err(e))) => return Err(Error::io("<study csv>", e)),
        None => return Err(Error::EmptyInput("study CSV has no header".into())),
    }
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<study csv>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| Error::Format { line: line_no, message };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(fail(format!("expected 6 fields, found {}", cols.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| fail(format!("`{s}`: {e}")));
        let condition: Condition = cols[1].parse().map_err(fail)?;
        let delta_plv = num(cols[2])?;
        let plv_eyecontact = num(cols[3])?;
        let likert = match (cols[4], cols[5]) {
            ("", "") => None,
            (a, b) => Some(LikertPair {
                pre: a.parse().map_err(|e| fail(format!("`{a}`: {e}")))?,
                post: b.parse().map_err(|e| fail(format!("`{b}`: {e}")))?,
            }),
        };
        let entry = dyads.entry(cols[0].to_string()).or_insert_with(|| DyadSummary {
            dyad_id: cols[0].to_string(),
            condition,
            delta_plv,
            plv_eyecontact,
            subjective: Vec::new(),
        });
        if entry.condition != condition || entry.delta_plv != delta_plv || entry.plv_eyecontact != plv_eyecontact {
            return Err(fail(format!("rows for dyad {} disagree", cols[0])));
        }
        entry.subjective.extend(likert);
    }
    Ok(dyads.into_values().collect())
}
