use serde::Serialize;

use cartolab::net_stats::{build_social_graph, louvain, temporal_modularity_sweep, CreatorNode, Sweep};

use super::{emit, Analysis};
use crate::context::Context;
use crate::error::Result;

pub struct Network;

#[derive(Serialize)]
struct NetworkOutput {
    nodes: Vec<CreatorNode>,
    edges: Vec<(usize, usize, f64)>,
    communities: Vec<usize>,
    modularity: f64,
    levels: usize,
    temporal_sweep: Sweep,
}

impl Analysis for Network {
    fn about(&self) -> &'static str {
        "co-publication graph, Louvain communities and temporal modularity"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let cfg = ctx.cfg.network.clone();
        let seed = ctx.seed(name);
        let records: Vec<_> = ctx.dataset()?.records.values().cloned().collect();
        let sg = build_social_graph(&records);
        let comm = louvain(&sg.graph, seed);
        let years: Vec<f64> = sg.nodes.iter().map(|n| n.mean_year).collect();
        let temporal_sweep = temporal_modularity_sweep(&sg.graph, &years, &cfg.widths);
        let out = NetworkOutput {
            edges: sg.graph.edges(),
            nodes: sg.nodes,
            modularity: comm.modularity,
            levels: comm.levels,
            communities: comm.labels,
            temporal_sweep,
        };
        emit(ctx, name, &cfg, &out)?;
        Ok(())
    }
}
