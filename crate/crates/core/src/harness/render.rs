//! Deterministic SVG frames. Integer-only geometry so frames are bytewise
//! stable across platforms: x = 10q + 5r, y = 9r (a 4 percent vertical
//! squeeze against the exact lattice, fine for inspection frames).
//!
//! Palette (frozen): core gray, supply blue, supply roots dark blue, demand
//! roots red, coarse-grid structure green, bubbles white, dead supply-graph
//! edges dashed.

use std::fmt::Write;

use crate::grid::{Dir, NodeCoord};
use crate::harness::feather_search;
use crate::harness::preprocess::PreparedScenario;
use crate::kernel::config::Configuration;
use crate::kernel::memory::Region;

const CORE: &str = "#b8b8b8";
const SUPPLY: &str = "#5b8ff0";
const SUPPLY_ROOT: &str = "#1f3f9e";
const DEMAND_ROOT: &str = "#d23b2f";
const DEMAND_FILL: &str = "#e9c46a";
const GRID_RING: &str = "#2f9e44";
const TARGET_GHOST: &str = "#dddddd";
const S_EDGE: &str = "#23486e";

fn px(n: NodeCoord) -> (i32, i32) {
    (10 * n.q + 5 * n.r, 9 * n.r)
}

fn hex_points(cx: i32, cy: i32) -> String {
    let offs = [(4, 0), (2, 4), (-2, 4), (-4, 0), (-2, -4), (2, -4)];
    offs.iter()
        .map(|(dx, dy)| format!("{},{}", cx + dx, cy + dy))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Render one frame. With a prepared scenario the target ghost cells,
/// role colors and supply-graph edges are drawn; without it, plain particles.
pub fn render_frame(cfg: &Configuration, prepared: Option<&PreparedScenario>) -> String {
    let snap = feather_search::snapshot(cfg);
    let mut xs: Vec<i32> = Vec::new();
    let mut ys: Vec<i32> = Vec::new();
    let mut consider = |n: NodeCoord| {
        let (x, y) = px(n);
        xs.push(x);
        ys.push(y);
    };
    for n in cfg.occupied_nodes() {
        consider(n);
    }
    if let Some(p) = prepared {
        for &n in &p.scenario.target {
            consider(n);
        }
    }
    let (min_x, max_x) = (
        xs.iter().min().copied().unwrap_or(0) - 12,
        xs.iter().max().copied().unwrap_or(0) + 12,
    );
    let (min_y, max_y) = (
        ys.iter().min().copied().unwrap_or(0) - 12,
        ys.iter().max().copied().unwrap_or(0) + 12,
    );
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">",
        min_x,
        min_y,
        max_x - min_x,
        max_y - min_y
    );

    // target ghost cells
    if let Some(p) = prepared {
        for &n in &p.scenario.target {
            let (x, y) = px(n);
            let _ = writeln!(
                svg,
                "<polygon points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"/>",
                hex_points(x, y),
                TARGET_GHOST
            );
        }
    }

    // supply-graph edges with direction arrows; dashed when dead
    let mut edges = String::new();
    for (&n, view) in &snap.nodes {
        for j in view.succ.iter() {
            let m = n.neighbor(j);
            let (x1, y1) = px(n);
            let (x2, y2) = px(m);
            let alive = snap
                .nodes
                .get(&m)
                .map(|t| {
                    t.gateway.map(|(_, live)| live).unwrap_or_else(|| {
                        t.lambda.any_for_dir(j.opposite()) || t.region == Region::Supply
                    })
                })
                .unwrap_or(false);
            let dash = if alive { "" } else { " stroke-dasharray=\"3 2\"" };
            // arrow: shaft to 70% of the way plus a fixed head
            let ax = x1 + (x2 - x1) * 7 / 10;
            let ay = y1 + (y2 - y1) * 7 / 10;
            let _ = writeln!(
                edges,
                "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{ax}\" y2=\"{ay}\" stroke=\"{S_EDGE}\" stroke-width=\"1\"{dash}/>"
            );
            let _ = writeln!(
                edges,
                "<circle cx=\"{ax}\" cy=\"{ay}\" r=\"1\" fill=\"{S_EDGE}\"/>"
            );
        }
    }

    // particles: capsules for expanded bodies, hexagons per node
    let mut bodies: Vec<(NodeCoord, Option<NodeCoord>, usize)> = cfg
        .particles
        .iter()
        .enumerate()
        .map(|(i, p)| (p.head, p.tail, i))
        .collect();
    bodies.sort();
    let mut glyphs = String::new();
    for (head, tail, pid) in bodies {
        if let Some(t) = tail {
            let (x1, y1) = px(head);
            let (x2, y2) = px(t);
            let _ = writeln!(
                glyphs,
                "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"#888888\" stroke-width=\"9\" stroke-linecap=\"round\"/>"
            );
        }
        let mem = cfg.mem(pid);
        let mut sides = vec![(head, crate::flow::bubble::BodyNode::Head)];
        if let Some(t) = tail {
            sides.push((t, crate::flow::bubble::BodyNode::Tail));
        }
        for (n, which) in sides {
            let st = mem.state(which);
            let fill = if st.supply_root.is_some() {
                SUPPLY_ROOT
            } else if st.demand_root.is_some() {
                DEMAND_ROOT
            } else {
                match st.region {
                    Region::Supply => SUPPLY,
                    Region::Demand => DEMAND_FILL,
                    _ => CORE,
                }
            };
            let (x, y) = px(n);
            let ring = if st.gl.map(|g| g.class) == Some(crate::grid::CoarseClass::GridNode) {
                format!(" stroke=\"{GRID_RING}\" stroke-width=\"2\"")
            } else if st.gl.map(|g| g.class) == Some(crate::grid::CoarseClass::EdgeNode) {
                format!(" stroke=\"{GRID_RING}\" stroke-width=\"1\"")
            } else {
                String::new()
            };
            let _ = writeln!(
                glyphs,
                "<polygon points=\"{}\" fill=\"{}\"{}/>",
                hex_points(x, y),
                fill,
                ring
            );
        }
        // bubble marker at the successor-side node
        if let Some(b) = mem.bubble {
            let n = cfg.particles[pid].node(b.vb);
            let (x, y) = px(n);
            let _ = writeln!(glyphs, "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"#ffffff\"/>");
        }
    }

    svg.push_str(&edges);
    svg.push_str(&glyphs);
    svg.push_str("</svg>\n");
    svg
}

/// Line-oriented dump of the supply graph: `node q r succ pred lambda`,
/// direction sets as six binary digits (direction 0 first), lambda as twelve
/// (direction-major, beta minor).
pub fn dump_supply(cfg: &Configuration) -> String {
    let snap = feather_search::snapshot(cfg);
    let mut out = String::new();
    for (&n, view) in &snap.nodes {
        if !view.in_s {
            continue;
        }
        let bits6 = |s: crate::grid::DirSet| -> String {
            Dir::all().map(|d| if s.contains(d) { '1' } else { '0' }).collect()
        };
        let lam: String = (0..12)
            .map(|k| {
                let d = Dir::from_index(k / 2);
                let b = (k % 2) as u8;
                if view.lambda.get(d, b) {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        let _ = writeln!(out, "node {} {} {} {} {}", n.q, n.r, bits6(view.succ), bits6(view.pred), lam);
    }
    out
}

/// Line-oriented dump of a tree: `node q r parent_dir cone_lo cone_hi role`.
pub fn dump_tree(cfg: &Configuration) -> String {
    let mut rows: Vec<(NodeCoord, String)> = Vec::new();
    for p in &cfg.particles {
        let mem = p.mem.borrow();
        let t = &mem.head_state.tree;
        if !t.in_tree() {
            continue;
        }
        let parent = t
            .parent
            .map(|d| p.frame.to_global(d).index().to_string())
            .unwrap_or_else(|| "-".into());
        let (lo, hi) = t
            .cone
            .map(|c| {
                let f = |d: Dir| p.frame.to_global(d).index().to_string();
                (f(c.lo()), f(c.hi()))
            })
            .unwrap_or_else(|| ("-".into(), "-".into()));
        let role = match t.role {
            Some(crate::trees::cone::FeatherRole::Root) => "root",
            Some(crate::trees::cone::FeatherRole::Shaft) => "shaft",
            Some(crate::trees::cone::FeatherRole::Branch) => "branch",
            None => "-",
        };
        rows.push((p.head, format!("node {} {} {} {} {} {}", p.head.q, p.head.r, parent, lo, hi, role)));
    }
    rows.sort();
    rows.into_iter().map(|(_, s)| s + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::node;

    #[test]
    fn empty_configuration_renders_valid_svg() {
        let cfg = Configuration::new(1);
        let svg = render_frame(&cfg, None);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn frames_are_deterministic() {
        let mk = || {
            let mut cfg = Configuration::new(7);
            cfg.add_particle(node(0, 0));
            cfg.add_particle(node(1, 0));
            cfg.add_particle(node(0, 1));
            render_frame(&cfg, None)
        };
        assert_eq!(mk(), mk());
    }
}
