//! Sufficient statistics, single-site change statistics and the fixed
//! goodness-of-fit battery.
//!
//! Change statistics are computed locally from the toggled node's in- and
//! out-neighbourhoods; triadic terms cost O(d²) in that node's degree and
//! never touch the rest of the graph.

use crate::attributes::Covariates;
use crate::error::{AlaamError, Result};
use crate::graph::DirectedGraph;
use crate::model::{validate_spec, EffectTerm, ModelSpec};

#[derive(Debug, Clone, Copy)]
enum Bound<'a> {
    Intercept,
    OutActivity,
    InActivity,
    OutStar(u8),
    Contagion,
    Reciprocal,
    IndirectContagion,
    IndirectTies,
    MixedTwoPath,
    Closure,
    Transitive,
    Covariate(&'a [f64]),
    Interaction(&'a [f64]),
}

/// A model specification bound to a graph and its covariates.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    graph: &'a DirectedGraph,
    spec: ModelSpec,
    bound: Vec<Bound<'a>>,
}

impl<'a> Model<'a> {
    pub fn new(
        graph: &'a DirectedGraph,
        spec: &ModelSpec,
        covariates: &'a Covariates,
    ) -> Result<Self> {
        let n = graph.node_count();
        let mut bound = Vec::with_capacity(spec.dim());
        let lookup = |name: &str| -> Result<&'a [f64]> {
            let col = covariates
                .get(name)
                .ok_or_else(|| AlaamError::Config(format!("unknown covariate {name:?}")))?;
            if col.len() != n {
                return Err(AlaamError::Dimension(format!(
                    "covariate {name:?} has {} values, graph has {n} nodes",
                    col.len()
                )));
            }
            Ok(col)
        };
        for term in &spec.terms {
            bound.push(match term {
                EffectTerm::Intercept => Bound::Intercept,
                EffectTerm::OutActivity => Bound::OutActivity,
                EffectTerm::InActivity => Bound::InActivity,
                EffectTerm::OutStar(s) => Bound::OutStar(*s),
                EffectTerm::Contagion => Bound::Contagion,
                EffectTerm::ReciprocalContagion => Bound::Reciprocal,
                EffectTerm::IndirectContagion => Bound::IndirectContagion,
                EffectTerm::IndirectTies => Bound::IndirectTies,
                EffectTerm::MixedTwoPath => Bound::MixedTwoPath,
                EffectTerm::ClosureContagion => Bound::Closure,
                EffectTerm::TransitiveContagion => Bound::Transitive,
                EffectTerm::Covariate(c) => Bound::Covariate(lookup(c)?),
                EffectTerm::ContagionInteraction(c) => Bound::Interaction(lookup(c)?),
            });
        }
        if spec.terms.contains(&EffectTerm::ReciprocalContagion)
            && graph.arc_count() > 0
            && graph.is_symmetric()
        {
            log::warn!("reciprocal-contagion on a symmetric graph duplicates contagion; the term is not identified");
        }
        Ok(Self {
            graph,
            spec: spec.clone(),
            bound,
        })
    }

    pub fn graph(&self) -> &'a DirectedGraph {
        self.graph
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.bound.len()
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn names(&self) -> Vec<String> {
        self.spec.names()
    }

    /// `z(y, x)`
    pub fn statistics(&self, y: &[u8]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.node_count());
        self.bound.iter().map(|&b| self.term_total(b, y)).collect()
    }

    /// Writes `z(Δ⁺ᵢy) − z(Δ⁻ᵢy)` into `out`.
    pub fn change_into(&self, y: &[u8], i: usize, out: &mut [f64]) {
        for (slot, &b) in out.iter_mut().zip(&self.bound) {
            *slot = self.term_change(b, y, i);
        }
    }

    pub fn change(&self, y: &[u8], i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.change_into(y, i, &mut out);
        out
    }

    /// `θᵀ(z(Δ⁺ᵢy) − z(Δ⁻ᵢy))`, the full-conditional log-odds of `yᵢ = 1`.
    pub fn log_odds(&self, y: &[u8], i: usize, theta: &[f64]) -> f64 {
        self.bound
            .iter()
            .zip(theta)
            .filter(|(_, &t)| t != 0.0)
            .map(|(&b, &t)| t * self.term_change(b, y, i))
            .sum()
    }

    fn term_total(&self, b: Bound<'_>, y: &[u8]) -> f64 {
        let g = self.graph;
        let n = g.node_count();
        let on = |i: usize| y[i] == 1;
        let mut total = 0.0;
        match b {
            Bound::Intercept => total = y.iter().map(|&v| f64::from(v)).sum(),
            Bound::OutActivity => {
                total = (0..n)
                    .filter(|&i| on(i))
                    .map(|i| g.out_degree(i) as f64)
                    .sum();
            }
            Bound::InActivity => {
                total = (0..n)
                    .filter(|&i| on(i))
                    .map(|i| g.in_degree(i) as f64)
                    .sum();
            }
            Bound::OutStar(s) => {
                total = (0..n)
                    .filter(|&i| on(i))
                    .map(|i| binom(g.out_degree(i), s))
                    .sum();
            }
            Bound::MixedTwoPath => {
                total = (0..n)
                    .filter(|&i| on(i))
                    .map(|i| {
                        let d = g.out_degree(i) as f64;
                        d * (d - 1.0).max(0.0)
                    })
                    .sum();
            }
            Bound::IndirectTies => {
                for i in (0..n).filter(|&i| on(i)) {
                    total += two_paths_out(g, i);
                }
            }
            Bound::Covariate(c) => {
                total = (0..n).filter(|&i| on(i)).map(|i| c[i]).sum();
            }
            Bound::Contagion => {
                for i in (0..n).filter(|&i| on(i)) {
                    total += g.out_neighbors(i).iter().filter(|&&j| on(j)).count() as f64;
                }
            }
            Bound::Interaction(w) => {
                for i in (0..n).filter(|&i| on(i)) {
                    let k = g.out_neighbors(i).iter().filter(|&&j| on(j)).count() as f64;
                    total += k * w[i];
                }
            }
            Bound::Reciprocal => {
                for i in (0..n).filter(|&i| on(i)) {
                    total += g
                        .out_neighbors(i)
                        .iter()
                        .filter(|&&j| j > i && on(j) && g.has_arc(j, i))
                        .count() as f64;
                }
            }
            Bound::IndirectContagion => {
                for a in (0..n).filter(|&a| on(a)) {
                    for &k in g.out_neighbors(a) {
                        total += g
                            .out_neighbors(k)
                            .iter()
                            .filter(|&&b| b != a && on(b))
                            .count() as f64;
                    }
                }
            }
            Bound::Closure | Bound::Transitive => {
                let need_middle = matches!(b, Bound::Transitive);
                // source j -> middle i -> end k, closed by j -> k
                for j in (0..n).filter(|&j| on(j)) {
                    for &i in g.out_neighbors(j) {
                        if need_middle && !on(i) {
                            continue;
                        }
                        total += g
                            .out_neighbors(i)
                            .iter()
                            .filter(|&&k| k != j && on(k) && g.has_arc(j, k))
                            .count() as f64;
                    }
                }
            }
        }
        total
    }

    fn term_change(&self, b: Bound<'_>, y: &[u8], i: usize) -> f64 {
        let g = self.graph;
        let on = |v: usize| y[v] == 1;
        let count_on = |vs: &[usize]| vs.iter().filter(|&&v| on(v)).count() as f64;
        match b {
            Bound::Intercept => 1.0,
            Bound::OutActivity => g.out_degree(i) as f64,
            Bound::InActivity => g.in_degree(i) as f64,
            Bound::OutStar(s) => binom(g.out_degree(i), s),
            Bound::MixedTwoPath => {
                let d = g.out_degree(i) as f64;
                d * (d - 1.0).max(0.0)
            }
            Bound::IndirectTies => two_paths_out(g, i),
            Bound::Covariate(c) => c[i],
            Bound::Contagion => count_on(g.out_neighbors(i)) + count_on(g.in_neighbors(i)),
            Bound::Interaction(w) => {
                let sent = count_on(g.out_neighbors(i)) * w[i];
                let received: f64 = g
                    .in_neighbors(i)
                    .iter()
                    .filter(|&&j| on(j))
                    .map(|&j| w[j])
                    .sum();
                sent + received
            }
            Bound::Reciprocal => g
                .out_neighbors(i)
                .iter()
                .filter(|&&j| on(j) && g.has_arc(j, i))
                .count() as f64,
            Bound::IndirectContagion => {
                let mut c = 0usize;
                for &k in g.out_neighbors(i) {
                    c += g
                        .out_neighbors(k)
                        .iter()
                        .filter(|&&b| b != i && on(b))
                        .count();
                }
                for &k in g.in_neighbors(i) {
                    c += g
                        .in_neighbors(k)
                        .iter()
                        .filter(|&&a| a != i && on(a))
                        .count();
                }
                c as f64
            }
            Bound::Closure => {
                let mut c = 0usize;
                // i as source
                for &m in g.out_neighbors(i) {
                    c += g
                        .out_neighbors(m)
                        .iter()
                        .filter(|&&k| k != i && on(k) && g.has_arc(i, k))
                        .count();
                }
                // i as end
                for &m in g.in_neighbors(i) {
                    c += g
                        .in_neighbors(m)
                        .iter()
                        .filter(|&&j| j != i && on(j) && g.has_arc(j, i))
                        .count();
                }
                c as f64
            }
            Bound::Transitive => {
                let mut c = 0usize;
                // i as middle: j -> i -> k with j -> k
                for &j in g.in_neighbors(i).iter().filter(|&&j| on(j)) {
                    c += g
                        .out_neighbors(i)
                        .iter()
                        .filter(|&&k| k != j && on(k) && g.has_arc(j, k))
                        .count();
                }
                // i as source: i -> m -> k with i -> k
                for &m in g.out_neighbors(i).iter().filter(|&&m| on(m)) {
                    c += g
                        .out_neighbors(m)
                        .iter()
                        .filter(|&&k| k != i && on(k) && g.has_arc(i, k))
                        .count();
                }
                // i as end: j -> m -> i with j -> i
                for &m in g.in_neighbors(i).iter().filter(|&&m| on(m)) {
                    c += g
                        .in_neighbors(m)
                        .iter()
                        .filter(|&&j| j != i && on(j) && g.has_arc(j, i))
                        .count();
                }
                c as f64
            }
        }
    }
}

/// Two-paths `i -> k -> j` with `j != i`.
fn two_paths_out(g: &DirectedGraph, i: usize) -> f64 {
    g.out_neighbors(i)
        .iter()
        .map(|&k| g.out_degree(k) - usize::from(g.has_arc(k, i)))
        .sum::<usize>() as f64
}

fn binom(d: usize, s: u8) -> f64 {
    let d = d as f64;
    match s {
        2 => d * (d - 1.0) / 2.0,
        3 => d * (d - 1.0) * (d - 2.0) / 6.0,
        _ => unreachable!("out-star order is validated at parse time"),
    }
    .max(0.0)
}

/// `z(y, x)` for a specification that has not been bound yet.
pub fn compute_statistics(
    y: &[u8],
    graph: &DirectedGraph,
    spec: &ModelSpec,
    covariates: &Covariates,
) -> Result<Vec<f64>> {
    check_outcomes(y, graph)?;
    Ok(Model::new(graph, spec, covariates)?.statistics(y))
}

pub fn change_statistics(
    y: &[u8],
    graph: &DirectedGraph,
    spec: &ModelSpec,
    covariates: &Covariates,
    i: usize,
) -> Result<Vec<f64>> {
    check_outcomes(y, graph)?;
    if i >= graph.node_count() {
        return Err(AlaamError::Dimension(format!("node {i} out of range")));
    }
    Ok(Model::new(graph, spec, covariates)?.change(y, i))
}

fn check_outcomes(y: &[u8], graph: &DirectedGraph) -> Result<()> {
    if y.len() != graph.node_count() {
        return Err(AlaamError::Dimension(format!(
            "outcome vector has length {}, graph has {} nodes",
            y.len(),
            graph.node_count()
        )));
    }
    Ok(())
}

/// Validates a specification against attribute data and binds it.
pub fn bind_model<'a>(
    graph: &'a DirectedGraph,
    spec: &ModelSpec,
    data: &'a crate::attributes::AttributeData,
) -> Result<Model<'a>> {
    data.check_len(graph.node_count())?;
    validate_spec(spec, data).map_err(AlaamError::Spec)?;
    Model::new(graph, spec, &data.covariates)
}

/// Names of the goodness-of-fit battery, in output order.
pub const GOF_NAMES: [&str; 15] = [
    "intercept",
    "direct-contagion",
    "reciprocal-contagion",
    "indirect-contagion",
    "closure-contagion",
    "transitive-contagion",
    "indegree-activity",
    "outdegree-activity",
    "mixed-two-paths",
    "out-2-star",
    "in-2-star",
    "out-triangles",
    "in-triangles",
    "transitive-triangles",
    "indirect-ties",
];

/// The fixed goodness-of-fit battery, aligned with [`GOF_NAMES`].
///
/// Triangle counts are anchored at an outcome-1 node `i` and count ordered
/// pairs `(j, k)` forming a transitive triad with the closing arc `j -> k`:
/// out-triangles have `i -> j, i -> k`; in-triangles `j -> i, k -> i`;
/// transitive triangles `j -> i -> k`.
pub fn gof_statistics(y: &[u8], g: &DirectedGraph) -> Vec<f64> {
    let n = g.node_count();
    let on = |i: usize| y[i] == 1;
    let spec = ModelSpec::new(vec![
        EffectTerm::Intercept,
        EffectTerm::Contagion,
        EffectTerm::ReciprocalContagion,
        EffectTerm::IndirectContagion,
        EffectTerm::ClosureContagion,
        EffectTerm::TransitiveContagion,
        EffectTerm::InActivity,
        EffectTerm::OutActivity,
        EffectTerm::MixedTwoPath,
        EffectTerm::OutStar(2),
    ]);
    let empty = Covariates::new();
    let model = Model::new(g, &spec, &empty).expect("battery has no covariates");
    let mut out = model.statistics(y);

    let mut in2 = 0.0;
    let mut out_tri = 0usize;
    let mut in_tri = 0usize;
    let mut trans_tri = 0usize;
    for i in (0..n).filter(|&i| on(i)) {
        in2 += binom(g.in_degree(i), 2);
        let outs = g.out_neighbors(i);
        let ins = g.in_neighbors(i);
        for &j in outs {
            out_tri += outs.iter().filter(|&&k| k != j && g.has_arc(j, k)).count();
        }
        for &j in ins {
            in_tri += ins.iter().filter(|&&k| k != j && g.has_arc(j, k)).count();
            trans_tri += outs.iter().filter(|&&k| k != j && g.has_arc(j, k)).count();
        }
    }
    let indirect_ties: f64 = (0..n).filter(|&i| on(i)).map(|i| two_paths_out(g, i)).sum();
    out.extend([
        in2,
        out_tri as f64,
        in_tri as f64,
        trans_tri as f64,
        indirect_ties,
    ]);
    out
}
