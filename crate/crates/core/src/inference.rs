//! Multiplicity adjustment of tail probabilities and edge selection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{BeamError, Result};
use crate::extsort::{ExternalSorter, SortOrder, SortedRecords};
use crate::pairstats::{PairStat, PairTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum AdjustmentMethod {
    Bonferroni,
    Holm,
    BenjaminiHochberg,
    BenjaminiYekutieli,
    None,
}

impl AdjustmentMethod {
    pub const ALL: [AdjustmentMethod; 5] = [
        AdjustmentMethod::Bonferroni,
        AdjustmentMethod::Holm,
        AdjustmentMethod::BenjaminiHochberg,
        AdjustmentMethod::BenjaminiYekutieli,
        AdjustmentMethod::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AdjustmentMethod::Bonferroni => "bonferroni",
            AdjustmentMethod::Holm => "holm",
            AdjustmentMethod::BenjaminiHochberg => "bh",
            AdjustmentMethod::BenjaminiYekutieli => "by",
            AdjustmentMethod::None => "none",
        }
    }

    /// Order in which the step procedures must visit the p-values.
    fn visit_order(self) -> Option<SortOrder> {
        match self {
            AdjustmentMethod::Holm => Some(SortOrder::KeyAscending),
            AdjustmentMethod::BenjaminiHochberg | AdjustmentMethod::BenjaminiYekutieli => {
                Some(SortOrder::KeyDescending)
            }
            AdjustmentMethod::Bonferroni | AdjustmentMethod::None => None,
        }
    }
}

impl fmt::Display for AdjustmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdjustmentMethod {
    type Err = BeamError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "bonferroni" => Ok(AdjustmentMethod::Bonferroni),
            "holm" => Ok(AdjustmentMethod::Holm),
            "bh" | "benjaminihochberg" | "fdr" => Ok(AdjustmentMethod::BenjaminiHochberg),
            "by" | "benjaminiyekutieli" => Ok(AdjustmentMethod::BenjaminiYekutieli),
            "none" => Ok(AdjustmentMethod::None),
            _ => Err(BeamError::config(format!(
                "unknown adjustment '{s}' (expected bonferroni, holm, bh, by or none)"
            ))),
        }
    }
}

/// `Σ_{i=1}^m 1/i`.
fn harmonic(m: u64) -> f64 {
    if m <= 1_000_000 {
        (1..=m).rev().map(|i| 1.0 / i as f64).sum()
    } else {
        let x = m as f64;
        x.ln() + 0.577_215_664_901_532_9 + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
    }
}

/// Adjusts p-values one at a time, fed in the order the method requires
/// (ascending for Holm, descending for BH and BY, any order otherwise).
struct StepAdjuster {
    method: AdjustmentMethod,
    m: u64,
    seen: u64,
    running: f64,
    by_factor: f64,
}

impl StepAdjuster {
    fn new(method: AdjustmentMethod, m: u64) -> Self {
        let by_factor = match method {
            AdjustmentMethod::BenjaminiYekutieli => harmonic(m),
            _ => 1.0,
        };
        let running = match method {
            AdjustmentMethod::Holm => 0.0,
            _ => 1.0,
        };
        StepAdjuster {
            method,
            m,
            seen: 0,
            running,
            by_factor,
        }
    }

    fn next(&mut self, p: f64) -> f64 {
        self.seen += 1;
        let m = self.m as f64;
        match self.method {
            AdjustmentMethod::None => p,
            AdjustmentMethod::Bonferroni => (m * p).min(1.0),
            AdjustmentMethod::Holm => {
                let k = self.seen as f64;
                self.running = self.running.max(((m - k + 1.0) * p).min(1.0));
                self.running
            }
            AdjustmentMethod::BenjaminiHochberg | AdjustmentMethod::BenjaminiYekutieli => {
                let rank = (self.m - self.seen + 1) as f64;
                self.running = self.running.min((self.by_factor * m * p / rank).min(1.0));
                self.running
            }
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(BeamError::domain(format!("p-value {p} outside [0, 1]")))
    }
}

/// Adjusted p-values, in input order.
pub fn adjust(pvalues: &[f64], method: AdjustmentMethod) -> Result<Vec<f64>> {
    for &p in pvalues {
        check_probability(p)?;
    }
    let mut adj = StepAdjuster::new(method, pvalues.len() as u64);
    let Some(order) = method.visit_order() else {
        return Ok(pvalues.iter().map(|&p| adj.next(p)).collect());
    };
    let mut idx: Vec<u64> = (0..pvalues.len() as u64).collect();
    idx.sort_unstable_by(|&a, &b| order_cmp(order, pvalues, a, b));
    let mut out = vec![0.0; pvalues.len()];
    for k in idx {
        out[k as usize] = adj.next(pvalues[k as usize]);
    }
    Ok(out)
}

fn order_cmp(order: SortOrder, p: &[f64], a: u64, b: u64) -> std::cmp::Ordering {
    let (ra, rb) = ((p[a as usize], a), (p[b as usize], b));
    match order {
        SortOrder::KeyAscending => ra.0.total_cmp(&rb.0).then(a.cmp(&b)),
        SortOrder::KeyDescending => rb.0.total_cmp(&ra.0).then(b.cmp(&a)),
        SortOrder::PayloadAscending => a.cmp(&b),
    }
}

/// Out-of-core version of [`adjust`]. Values are pushed as `(p, index)`
/// with distinct indices `0..m`; [`StreamingAdjuster::finish`] yields
/// `(adjusted, index)` by ascending index. At most about `budget_bytes` of
/// records are held in memory at once.
pub struct StreamingAdjuster {
    adj: StepAdjuster,
    m: u64,
    by_value: Option<ExternalSorter>,
    by_index: ExternalSorter,
}

impl StreamingAdjuster {
    pub fn new(method: AdjustmentMethod, m: u64, budget_bytes: usize) -> Self {
        StreamingAdjuster {
            adj: StepAdjuster::new(method, m),
            m,
            by_value: method.visit_order().map(|o| ExternalSorter::new(o, budget_bytes)),
            by_index: ExternalSorter::new(SortOrder::PayloadAscending, budget_bytes),
        }
    }

    pub fn push(&mut self, p: f64, index: u64) -> Result<()> {
        check_probability(p)?;
        match &mut self.by_value {
            Some(s) => s.push((p, index)),
            None => self.by_index.push((self.adj.next(p), index)),
        }
    }

    pub fn finish(mut self) -> Result<SortedRecords> {
        if let Some(by_value) = self.by_value.take() {
            for rec in by_value.finish()? {
                let (p, k) = rec?;
                self.by_index.push((self.adj.next(p), k))?;
            }
        }
        if self.by_index.len() != self.m {
            return Err(BeamError::numerical(format!(
                "expected {} p-values, received {}",
                self.m,
                self.by_index.len()
            )));
        }
        self.by_index.finish()
    }
}

/// [`StreamingAdjuster`] over an iterator.
pub fn adjust_streaming<I>(tails: I, m: u64, method: AdjustmentMethod, budget_bytes: usize) -> Result<SortedRecords>
where
    I: IntoIterator<Item = (f64, u64)>,
{
    let mut s = StreamingAdjuster::new(method, m, budget_bytes);
    for (p, k) in tails {
        s.push(p, k)?;
    }
    s.finish()
}

/// Which independence hypothesis a graph encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestType {
    /// `σ_ij = 0`; rejected pairs form the bidirected graph.
    Marginal,
    /// `ω_ij = 0`; rejected pairs form the undirected graph.
    Conditional,
}

impl TestType {
    pub fn as_str(self) -> &'static str {
        match self {
            TestType::Marginal => "marginal",
            TestType::Conditional => "conditional",
        }
    }

    /// `(log scaled BF, tail probability, posterior correlation)` of a pair.
    pub fn columns(self, s: &PairStat) -> (f64, f64, f64) {
        match self {
            TestType::Marginal => (s.log_sbf_m, s.tail_m, s.r_t),
            TestType::Conditional => (s.log_sbf_c, s.tail_c, s.r_q),
        }
    }
}

impl fmt::Display for TestType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestType {
    type Err = BeamError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "marginal" | "m" => Ok(TestType::Marginal),
            "conditional" | "c" => Ok(TestType::Conditional),
            _ => Err(BeamError::config(format!(
                "unknown test '{s}' (expected marginal or conditional)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRate {
    pub method: AdjustmentMethod,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub i: u32,
    pub j: u32,
    pub log_sbf: f64,
    pub raw_tail: f64,
    pub adjusted_tail: f64,
}

/// Selected edges with adjacency lists and degrees.
#[derive(Debug, Clone)]
pub struct GraphResult {
    pub test: TestType,
    pub p: usize,
    pub edges: Vec<GraphEdge>,
    /// Sorted neighbour lists.
    pub adjacency: Vec<Vec<u32>>,
    pub degrees: Vec<usize>,
    pub error_rate: ErrorRate,
}

impl GraphResult {
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Levels in `(0, 1]` are accepted; level 1 keeps every pair whose adjusted
/// tail is at most 1.
pub fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level <= 1.0 {
        Ok(())
    } else {
        Err(BeamError::config(format!("level must lie in (0, 1], got {level}")))
    }
}

/// Accumulates edges offered in any order.
pub struct GraphBuilder {
    graph: GraphResult,
}

impl GraphBuilder {
    pub fn new(test: TestType, p: usize, method: AdjustmentMethod, level: f64) -> Result<Self> {
        check_level(level)?;
        Ok(GraphBuilder {
            graph: GraphResult {
                test,
                p,
                edges: Vec::new(),
                adjacency: vec![Vec::new(); p],
                degrees: vec![0; p],
                error_rate: ErrorRate { method, level },
            },
        })
    }

    /// Adds the pair when its adjusted tail is at most the level; returns
    /// whether it was selected.
    pub fn offer(&mut self, i: u32, j: u32, log_sbf: f64, raw_tail: f64, adjusted_tail: f64) -> bool {
        if !(adjusted_tail <= self.graph.error_rate.level) {
            return false;
        }
        let g = &mut self.graph;
        g.edges.push(GraphEdge {
            i,
            j,
            log_sbf,
            raw_tail,
            adjusted_tail,
        });
        g.adjacency[i as usize].push(j);
        g.adjacency[j as usize].push(i);
        g.degrees[i as usize] += 1;
        g.degrees[j as usize] += 1;
        true
    }

    pub fn finish(mut self) -> GraphResult {
        for nb in &mut self.graph.adjacency {
            nb.sort_unstable();
        }
        self.graph.edges.sort_by_key(|e| (e.i, e.j));
        self.graph
    }
}

/// Adjusted tails of one test over every pair of the table, in table order.
pub fn adjust_table(table: &PairTable, test: TestType, method: AdjustmentMethod) -> Result<Vec<f64>> {
    let tails: Vec<f64> = table.pairs.iter().map(|s| test.columns(s).1).collect();
    adjust(&tails, method)
}

/// Adjusts the chosen tail column over all pairs and keeps pairs whose
/// adjusted tail is at most `level`.
pub fn select_edges(table: &PairTable, test: TestType, method: AdjustmentMethod, level: f64) -> Result<GraphResult> {
    check_level(level)?;
    let adjusted = adjust_table(table, test, method)?;
    let mut b = GraphBuilder::new(test, table.p, method, level)?;
    for (s, &a) in table.pairs.iter().zip(&adjusted) {
        let (log_sbf, tail, _) = test.columns(s);
        b.offer(s.i, s.j, log_sbf, tail, a);
    }
    Ok(b.finish())
}

/// Number of nodes per degree value (degrees with no nodes omitted).
pub fn degree_distribution(g: &GraphResult) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for &d in &g.degrees {
        *hist.entry(d).or_insert(0) += 1;
    }
    hist
}
