//! Structured (JSON) and DOT exports of ensembles and local ensembles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Completeness, Ensemble, EnsembleNode, NodeId, NodeStatus, Transition};
use crate::error::{Error, Result};
use crate::local::LocalEnsemble;
use crate::model::{Configuration, LocalState, PartyId, Protocol, SystemParams};
use crate::rational::{serde_fraction, Ratio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Structured,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletenessTag {
    Complete,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub n: usize,
    pub t: usize,
    pub f: usize,
    pub completeness: CompletenessTag,
    #[serde(with = "serde_fraction")]
    pub residual: Ratio,
    pub protocol: String,
    pub strategy: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    #[serde(with = "serde_fraction")]
    pub weight: Ratio,
    pub child: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: usize,
    pub depth: usize,
    pub status: NodeStatus,
    #[serde(flatten)]
    pub config: Configuration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<Transition>,
    pub children: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleDocument {
    pub header: Header,
    pub nodes: Vec<NodeDoc>,
}

impl EnsembleDocument {
    pub fn from_ensemble(ens: &Ensemble) -> Self {
        let (completeness, residual) = match &ens.completeness {
            Completeness::Complete => (CompletenessTag::Complete, Ratio::from_integer(0.into())),
            Completeness::Truncated { residual } => (CompletenessTag::Truncated, residual.clone()),
        };
        Self {
            header: Header {
                n: ens.params.n,
                t: ens.params.t,
                f: ens.params.f,
                completeness,
                residual,
                protocol: ens.protocol.name().to_string(),
                strategy: ens.strategy.clone(),
            },
            nodes: ens
                .nodes()
                .iter()
                .map(|v| NodeDoc {
                    id: v.id.0,
                    depth: v.depth,
                    status: v.status,
                    config: v.config.clone(),
                    event: v.via.clone(),
                    children: v
                        .children
                        .iter()
                        .map(|(w, c)| EdgeDoc {
                            weight: w.clone(),
                            child: c.0,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds the ensemble; `protocol` supplies the decision extractor
    /// and must carry the name recorded in the header.
    pub fn into_ensemble(self, protocol: Arc<dyn Protocol>) -> Result<Ensemble> {
        if protocol.name() != self.header.protocol {
            return Err(Error::Document(format!(
                "document was produced by {}, not {}",
                self.header.protocol,
                protocol.name()
            )));
        }
        let completeness = match self.header.completeness {
            CompletenessTag::Complete => Completeness::Complete,
            CompletenessTag::Truncated => Completeness::Truncated {
                residual: self.header.residual,
            },
        };
        let nodes = self
            .nodes
            .into_iter()
            .map(|d| EnsembleNode {
                id: NodeId(d.id),
                parent: None,
                depth: d.depth,
                config: d.config,
                via: d.event,
                children: d.children.into_iter().map(|e| (e.weight, NodeId(e.child))).collect(),
                status: d.status,
                reach: Ratio::from_integer(1.into()),
            })
            .collect();
        let params = SystemParams {
            n: self.header.n,
            t: self.header.t,
            f: self.header.f,
        };
        Ensemble::from_parts(nodes, params, completeness, protocol, self.header.strategy)
    }
}

pub fn ensemble_to_json(ens: &Ensemble) -> String {
    serde_json::to_string_pretty(&EnsembleDocument::from_ensemble(ens)).expect("documents serialize")
}

pub fn ensemble_from_json(text: &str, protocol: Arc<dyn Protocol>) -> Result<Ensemble> {
    let doc: EnsembleDocument = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    doc.into_ensemble(protocol)
}

/// FNV-1a over the state's JSON form; stable across runs.
pub fn state_hash(state: &LocalState) -> u64 {
    let bytes = serde_json::to_vec(state).expect("states serialize");
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

const PALETTE: [&str; 12] = [
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcf60c",
    "#fabebe", "#008080", "#e6beff",
];

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One vertex per node and one edge per parent link, labeled with its
/// weight. Vertices are filled by the focus party's local state: equal
/// states share a color and a `class`.
pub fn ensemble_to_dot(ens: &Ensemble, focus: PartyId) -> String {
    let mut colors: BTreeMap<u64, usize> = BTreeMap::new();
    let mut out = String::from("digraph ensemble {\n  node [style=filled, shape=circle];\n");
    for v in ens.nodes() {
        let hash = v.config.parties.get(focus.0).map_or(0, |s| state_hash(s));
        let next = colors.len();
        let color = PALETTE[*colors.entry(hash).or_insert(next) % PALETTE.len()];
        let mut label = format!("{}", v.id);
        if let Some(t) = &v.via {
            let _ = write!(label, "\\n{}: {}", t.party, escape(&t.event.to_string()));
        }
        let _ = writeln!(
            out,
            "  {} [label=\"{label}\", fillcolor=\"{color}\", class=\"s{hash:016x}\"];",
            v.id
        );
    }
    for v in ens.nodes() {
        for (w, c) in &v.children {
            let _ = writeln!(out, "  {} -> {} [label=\"{w}\"];", v.id, c);
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalNodeDoc {
    pub id: usize,
    pub state_hash: String,
    pub state: LocalState,
    #[serde(with = "serde_fraction")]
    pub probability: Ratio,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalEnsembleDocument {
    pub party: PartyId,
    pub nodes: Vec<LocalNodeDoc>,
}

impl LocalEnsembleDocument {
    pub fn from_local(lens: &LocalEnsemble) -> Self {
        Self {
            party: lens.party,
            nodes: lens
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| LocalNodeDoc {
                    id,
                    state_hash: format!("{:016x}", state_hash(&n.state)),
                    state: n.state.as_ref().clone(),
                    probability: n.probability.clone(),
                    children: n.children.clone(),
                })
                .collect(),
        }
    }
}

pub fn local_to_json(lens: &LocalEnsemble) -> String {
    serde_json::to_string_pretty(&LocalEnsembleDocument::from_local(lens)).expect("documents serialize")
}

pub fn local_to_dot(lens: &LocalEnsemble) -> String {
    let mut out = format!("digraph local_{} {{\n  node [style=filled, shape=box];\n", lens.party);
    for (id, n) in lens.nodes.iter().enumerate() {
        let hash = state_hash(&n.state);
        let _ = writeln!(
            out,
            "  l{id} [label=\"{hash:08x}\\np={}\", fillcolor=\"{}\", class=\"s{hash:016x}\"];",
            n.probability,
            PALETTE[id % PALETTE.len()],
            hash = hash
        );
    }
    for (id, n) in lens.nodes.iter().enumerate() {
        for c in &n.children {
            let _ = writeln!(out, "  l{id} -> l{c};");
        }
    }
    out.push_str("}\n");
    out
}
