//! The empirical pipeline from scored posts to a shift distribution.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analytics::{
    categorize_users, category_transitions, compute_shifts, export_shift_distribution, homophily,
    shift_dependence, write_shift_samples, CategoryAssignment, DependenceReport, HomophilyReport,
    KwObservations, NeighborAveraging, PostRecord, ShiftExport, ShiftExtraction,
    TransitionEstimate, TransitionMethod, DEFAULT_HOMOPHILY_MARGIN,
};
use crate::behavior::UserCategory;
use crate::error::Result;
use crate::graph::{DirectedGraph, IdMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub averaging: NeighborAveraging,
    pub input_bins: usize,
    pub shift_bins: usize,
    pub margin: f64,
    pub observations: KwObservations,
    pub transition_method: TransitionMethod,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            averaging: NeighborAveraging::UserWeighted,
            input_bins: 20,
            shift_bins: 40,
            margin: DEFAULT_HOMOPHILY_MARGIN,
            observations: KwObservations::PerSample,
            transition_method: TransitionMethod::Mixture,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOutcome {
    pub extraction: ShiftExtraction,
    pub assignment: CategoryAssignment,
    pub export: ShiftExport,
    /// `None` when no user has shifts in two buckets.
    pub transitions: Option<TransitionEstimate>,
    /// Users labeled by overall category.
    pub category_homophily: Option<HomophilyReport<UserCategory>>,
    /// Users with two or more categorized buckets labeled changing or not.
    pub changing_homophily: Option<HomophilyReport<&'static str>>,
    pub dependence: Option<DependenceReport>,
}

pub fn analyze(
    g: &DirectedGraph,
    ids: &IdMap,
    posts: &[PostRecord],
    opts: &AnalysisOptions,
) -> Result<AnalysisOutcome> {
    let extraction = compute_shifts(posts, g, ids, opts.averaging)?;
    let assignment = categorize_users(&extraction.samples)?;
    let export = export_shift_distribution(
        &assignment.categorized_shifts(&extraction.samples),
        opts.input_bins,
        opts.shift_bins,
    )?;
    let transitions = category_transitions(&assignment.sequences(), opts.transition_method).ok();

    let mut by_category = vec![None; g.node_count()];
    let mut by_changing = vec![None; g.node_count()];
    for u in &assignment.users {
        by_category[u.user.index()] = Some(u.overall);
        if u.by_bucket.len() >= 2 {
            by_changing[u.user.index()] = Some(if u.changing() {
                "changing"
            } else {
                "not changing"
            });
        }
    }
    let category_homophily = homophily(g, &by_category, opts.margin).ok();
    let changing_homophily = homophily(g, &by_changing, opts.margin).ok();
    let dependence = shift_dependence(
        &extraction.samples,
        &assignment,
        opts.input_bins,
        opts.observations,
    )
    .ok();
    Ok(AnalysisOutcome {
        extraction,
        assignment,
        export,
        transitions,
        category_homophily,
        changing_homophily,
        dependence,
    })
}

impl AnalysisOutcome {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let e = &self.extraction;
        let _ = writeln!(
            s,
            "{} shift samples; {} posts by {} unknown users skipped",
            e.samples.len(),
            e.unresolved_posts,
            e.unresolved_users
        );
        let split = &self.assignment.overall_split;
        let _ = writeln!(
            s,
            "IQR split of mean shifts: Q1 = {:.6}, Q3 = {:.6}, whiskers [{:.6}, {:.6}]",
            split.q1, split.q3, split.lower, split.upper
        );
        for c in UserCategory::ALL {
            let _ = writeln!(s, "  {c}: {} users", self.assignment.count(c));
        }
        if !self.export.filled.is_empty() {
            let _ = writeln!(
                s,
                "{} empty input bins filled with a zero shift",
                self.export.filled.len()
            );
        }
        match &self.transitions {
            Some(t) => {
                let _ = writeln!(
                    s,
                    "transitions over {} users: observed changing fraction {:.4}, estimated {:.4}",
                    t.users, t.observed_changing_fraction, t.changing_fraction
                );
                for from in UserCategory::ALL {
                    for to in UserCategory::ALL {
                        if from != to {
                            let _ = writeln!(s, "  {from} -> {to}: {:.4}", t.matrix.prob(from, to));
                        }
                    }
                }
            }
            None => s.push_str("transitions: no user has two categorized buckets\n"),
        }
        if let Some(h) = &self.category_homophily {
            let _ = write!(s, "by category: {h}");
        }
        if let Some(h) = &self.changing_homophily {
            let _ = write!(s, "by changing behaviour: {h}");
        }
        if let Some(d) = &self.dependence {
            let _ = write!(s, "{d}");
        }
        s
    }

    pub fn write_outputs(&self, dir: &Path, ids: &IdMap) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut create = |name: &str| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            let f = File::create(&path)?;
            written.push(path);
            Ok(BufWriter::new(f))
        };
        write_shift_samples(create("shifts.csv")?, &self.extraction.samples, ids)?;
        self.assignment.write_csv(create("categories.csv")?, ids)?;
        self.export.write_csv(create("shift_distribution.csv")?)?;
        if let Some(t) = &self.transitions {
            t.matrix.write(create("transitions.csv")?)?;
        }
        if let Some(h) = &self.category_homophily {
            create("homophily_category.csv")?.write_all(h.to_csv().as_bytes())?;
        }
        if let Some(h) = &self.changing_homophily {
            create("homophily_changing.csv")?.write_all(h.to_csv().as_bytes())?;
        }
        create("analysis_summary.txt")?.write_all(self.summary().as_bytes())?;
        Ok(written)
    }
}
