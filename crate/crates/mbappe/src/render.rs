//! Bird's-eye SVG of an episode: map, agent tracks, the candidate segments
//! explored at each planning step (colored by Q) and the executed path.

use std::fmt::Write as _;

use mbappe_core::{rollout, ActionGrid, Point, TICK};

use crate::episode::EpisodeLog;
use crate::error::{Error, Result};
use crate::export::{q_color, q_range};
use crate::scenario::Scenario;

const EXECUTED_COLOR: &str = "#00a651";
const MARGIN: f64 = 10.0;
const MAX_SIDE_PX: f64 = 2400.0;

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn fit(points: &[Point]) -> Self {
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        if points.is_empty() {
            (min_x, min_y, max_x, max_y) = (0.0, 0.0, 1.0, 1.0);
        }
        let span = (max_x - min_x).max(max_y - min_y).max(1.0);
        let scale = (MAX_SIDE_PX / span).min(8.0);
        Self {
            min_x,
            max_y,
            scale,
            width: (max_x - min_x) * scale + 2.0 * MARGIN,
            height: (max_y - min_y) * scale + 2.0 * MARGIN,
        }
    }

    fn coords(&self, pts: impl IntoIterator<Item = Point>) -> String {
        let mut out = String::new();
        for (i, p) in pts.into_iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let x = (p.x - self.min_x) * self.scale + MARGIN;
            let y = (self.max_y - p.y) * self.scale + MARGIN;
            let _ = write!(out, "{x:.2},{y:.2}");
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders `log` over `scenario`. The log must belong to the scenario.
pub fn render_svg(scenario: &Scenario, log: &EpisodeLog) -> Result<String> {
    if log.header.scenario_id != scenario.id {
        return Err(Error::Input(format!(
            "episode log is for scenario {:?}, not {:?}",
            log.header.scenario_id, scenario.id
        )));
    }
    let params = scenario.ego_init.params;
    let grid = ActionGrid::default();
    let per_node = ((log.header.node_duration / TICK).round() as usize).max(1);
    let end_time = log.ticks.last().map_or(0.0, |t| t.time);

    let executed: Vec<Point> = std::iter::once(log.header.initial_state)
        .chain(log.ticks.iter().map(|t| t.state))
        .map(|s| Point::new(s.x, s.y))
        .collect();
    let tracks: Vec<(String, Vec<Point>)> = scenario
        .agents
        .iter()
        .map(|a| {
            let n = ((end_time / TICK).round() as usize + 1).min(a.trajectory.len());
            (a.id.clone(), a.trajectory[..n.max(1)].iter().map(|p| Point::new(p.x, p.y)).collect())
        })
        .collect();
    // (Q, segment) per explored root child, grouped per planning step
    let candidates: Vec<Vec<(f64, Vec<Point>)>> = log
        .planning
        .iter()
        .map(|step| {
            step.children
                .iter()
                .filter(|c| c.n >= 1)
                .map(|c| {
                    let states = rollout(&step.root, grid.action(c.action), per_node, TICK, &params);
                    let pts = std::iter::once(Point::new(step.root.x, step.root.y))
                        .chain(states.iter().map(|s| Point::new(s.x, s.y)))
                        .collect();
                    (c.q, pts)
                })
                .collect()
        })
        .collect();

    // frame the episode, not the whole map
    let mut extent: Vec<Point> = executed.clone();
    extent.extend(tracks.iter().flat_map(|(_, t)| t.iter().copied()));
    extent.extend(candidates.iter().flatten().flat_map(|(_, s)| s.iter().copied()));
    let lo = extent.iter().fold(Point::new(f64::MAX, f64::MAX), |a, p| Point::new(a.x.min(p.x), a.y.min(p.y)));
    let hi = extent.iter().fold(Point::new(f64::MIN, f64::MIN), |a, p| Point::new(a.x.max(p.x), a.y.max(p.y)));
    extent.push(Point::new(lo.x - 15.0, lo.y - 15.0));
    extent.push(Point::new(hi.x + 15.0, hi.y + 15.0));
    let frame = Frame::fit(&extent);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
        w = frame.width,
        h = frame.height
    );
    let _ = writeln!(svg, "  <title>{}</title>", escape(&scenario.id));
    let _ = writeln!(svg, r##"  <rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>"##);

    svg.push_str("  <g id=\"drivable\" fill=\"#e6e6e6\" stroke=\"#b0b0b0\" stroke-width=\"1\">\n");
    for poly in scenario.map.drivable_area() {
        let _ = writeln!(svg, r#"    <polygon points="{}"/>"#, frame.coords(poly.vertices().iter().copied()));
    }
    svg.push_str("  </g>\n");

    svg.push_str("  <g id=\"centerlines\" fill=\"none\" stroke=\"#8c8c8c\" stroke-width=\"1\" stroke-dasharray=\"6 4\">\n");
    for c in scenario.map.centerlines() {
        let _ = writeln!(
            svg,
            r#"    <polyline class="centerline" data-id="{}" points="{}"/>"#,
            escape(&c.id),
            frame.coords(c.points().iter().copied())
        );
    }
    svg.push_str("  </g>\n");

    svg.push_str("  <g id=\"agents\" fill=\"none\" stroke=\"#3366cc\" stroke-width=\"2\">\n");
    for (id, pts) in &tracks {
        let _ = writeln!(
            svg,
            r#"    <polyline class="agent" data-id="{}" points="{}"/>"#,
            escape(id),
            frame.coords(pts.iter().copied())
        );
    }
    svg.push_str("  </g>\n");

    svg.push_str("  <g id=\"candidates\" fill=\"none\" stroke-width=\"1.5\" stroke-opacity=\"0.8\">\n");
    for step in &candidates {
        let (lo, hi) = q_range(step.iter().map(|(q, _)| *q));
        for (q, pts) in step {
            let _ = writeln!(
                svg,
                r#"    <polyline class="candidate" stroke="{}" points="{}"/>"#,
                q_color(*q, lo, hi),
                frame.coords(pts.iter().copied())
            );
        }
    }
    svg.push_str("  </g>\n");

    svg.push_str("  <g id=\"executed\">\n");
    let _ = writeln!(
        svg,
        r#"    <polyline class="executed" fill="none" stroke="{EXECUTED_COLOR}" stroke-width="4" points="{}"/>"#,
        frame.coords(executed.iter().copied())
    );
    svg.push_str("  </g>\n</svg>\n");
    Ok(svg)
}
