//! Hand-written SVG: the sweep heatmap and the level-flow plot.

use std::fmt::Write;

use crate::experiments::{EventKind, LevelFlowTrace, Scaling, SweepResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const TOP: f64 = 50.0;
const PLOT_W: f64 = 420.0;
const PLOT_H: f64 = 390.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Viridis-like ramp on `[0, 1]`.
pub fn color(f: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.00, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.50, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.00, [253.0, 231.0, 37.0]),
    ];
    let f = if f.is_finite() { f.clamp(0.0, 1.0) } else { return "#999999".into() };
    let k = STOPS.iter().position(|s| s.0 >= f).unwrap_or(4).max(1);
    let (a, b) = (STOPS[k - 1], STOPS[k]);
    let w = (f - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + w * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <title>{}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        esc(title)
    );
}

fn axis_label(scale: Scaling) -> &'static str {
    match scale {
        Scaling::Mu0 => "μ/μ₀",
        Scaling::Mu0Prime => "μ/μ₀′",
        Scaling::MuTPrime => "μ/μ_T′",
    }
}

/// Complex-fraction map: `T` columns left to right (equal width, grid
/// order), `μ` rescaled by `scale` upwards. The vertical range is the one
/// covered by every column.
pub fn heatmap(result: &SweepResult, scale: Scaling) -> String {
    let cfg = &result.config;
    let n_t = cfg.t_grid.len();
    let channels = cfg.ensemble.channels;
    let ymax = cfg
        .t_grid
        .iter()
        .map(|&t| cfg.mu_grid[cfg.mu_grid.len() - 1] * scale.factor(channels, t))
        .fold(f64::INFINITY, f64::min);
    let ymap = |y: f64| TOP + PLOT_H * (1.0 - (y / ymax).clamp(0.0, 1.0));
    let col_w = PLOT_W / n_t as f64;

    let mut s = String::new();
    header(&mut s, "complex-level fraction");
    s.push_str("<g id=\"cells\" shape-rendering=\"crispEdges\">\n");
    for (ti, &t) in cfg.t_grid.iter().enumerate() {
        let k = scale.factor(channels, t);
        let ys: Vec<f64> = cfg.mu_grid.iter().map(|x| x * k).collect();
        for (mi, cell) in result.column(ti).iter().enumerate() {
            let lo = if mi == 0 { ys[0] } else { 0.5 * (ys[mi - 1] + ys[mi]) };
            let hi = if mi + 1 == ys.len() { ys[mi] } else { 0.5 * (ys[mi] + ys[mi + 1]) };
            if lo >= ymax {
                continue;
            }
            let (y_top, y_bot) = (ymap(hi), ymap(lo));
            let f = cell.estimate.map(|e| e.f).unwrap_or(f64::NAN);
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"><title>T={} μ/μ₀={} f={}</title></rect>",
                LEFT + ti as f64 * col_w,
                y_top,
                col_w,
                (y_bot - y_top).max(0.0),
                color(f),
                t,
                cell.mu_over_mu0,
                f
            );
        }
    }
    s.push_str("</g>\n");

    // axes
    let bottom = TOP + PLOT_H;
    let _ = writeln!(
        s,
        "<g id=\"axes\" stroke=\"black\" fill=\"none\"><line x1=\"{LEFT}\" y1=\"{bottom}\" x2=\"{}\" y2=\"{bottom}\"/><line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{bottom}\"/></g>",
        LEFT + PLOT_W
    );
    s.push_str("<g id=\"ticks\" text-anchor=\"middle\">\n");
    let every = n_t.div_ceil(5).max(1);
    for (ti, &t) in cfg.t_grid.iter().enumerate() {
        if ti % every != 0 && ti + 1 != n_t {
            continue;
        }
        let x = LEFT + (ti as f64 + 0.5) * col_w;
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{bottom}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/><text x=\"{x:.2}\" y=\"{}\">{}</text>",
            bottom + 5.0,
            bottom + 18.0,
            format_tick(t)
        );
    }
    for k in 0..=4 {
        let v = ymax * k as f64 / 4.0;
        let y = ymap(v);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            format_tick(v)
        );
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        "<text id=\"xlabel\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">T</text>\n\
         <text id=\"ylabel\" x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>",
        LEFT + PLOT_W / 2.0,
        bottom + 40.0,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0,
        axis_label(scale)
    );

    // colorbar
    let cb_x = LEFT + PLOT_W + 30.0;
    s.push_str("<g id=\"colorbar\">\n");
    let steps = 50;
    for k in 0..steps {
        let f = (k as f64 + 0.5) / steps as f64;
        let y = TOP + PLOT_H * (1.0 - (k + 1) as f64 / steps as f64);
        let _ = writeln!(
            s,
            "<rect x=\"{cb_x}\" y=\"{y:.2}\" width=\"18\" height=\"{:.2}\" fill=\"{}\"/>",
            PLOT_H / steps as f64 + 0.3,
            color(f)
        );
    }
    for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let y = TOP + PLOT_H * (1.0 - v);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.2}\">{label}</text>", cb_x + 24.0, y + 4.0);
    }
    let _ = writeln!(s, "<text x=\"{cb_x}\" y=\"{}\">f</text>\n</g>", TOP - 8.0);

    let _ = writeln!(
        s,
        "<text id=\"annotation\" x=\"{LEFT}\" y=\"24\">{}</text>",
        esc(&format!(
            "{} class, {} variant, M={}, N={}, {} realizations, seed {}",
            cfg.ensemble.class,
            cfg.variant,
            cfg.ensemble.dim,
            channels,
            cfg.realizations,
            cfg.ensemble.seed
        ))
    );
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.1 {
        format!("{:.2}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

/// Real parts of the traced levels against the path coordinate, with the
/// real levels drawn as polylines and coalescences marked.
pub fn flow(trace: &LevelFlowTrace) -> String {
    let n_seg = (trace.config.path.len() - 1) as f64;
    let dim = trace.config.ensemble.dim as f64;
    // same window as the sweeps: a quarter of the semicircle radius
    let emax = 0.25 * 2.0 * trace.delta0 * dim / std::f64::consts::PI;
    let xmap = |s: f64| LEFT + PLOT_W * s / n_seg;
    let ymap = |e: f64| TOP + PLOT_H * (1.0 - (e + emax) / (2.0 * emax));
    let mut s = String::new();
    header(&mut s, "level flow");
    s.push_str("<g id=\"levels\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"0.8\">\n");
    for tr in &trace.trajectories {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, s: &mut String| {
            if run.len() >= 2 {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(s, "<polyline points=\"{}\"/>", pts.join(" "));
            }
            run.clear();
        };
        for (step, z) in tr.iter().enumerate() {
            if z.im.abs() <= trace.tolerance && z.re.abs() <= emax {
                run.push((xmap(trace.points[step].s), ymap(z.re)));
            } else {
                flush(&mut run, &mut s);
            }
        }
        flush(&mut run, &mut s);
    }
    s.push_str("</g>\n<g id=\"events\" fill=\"#c0392b\">\n");
    for e in trace.events.iter().filter(|e| e.kind == EventKind::Coalescence && e.energy.abs() <= emax) {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\"/>",
            xmap(e.parameter),
            ymap(e.energy)
        );
    }
    s.push_str("</g>\n");
    let bottom = TOP + PLOT_H;
    let _ = writeln!(
        s,
        "<g id=\"axes\" stroke=\"black\" fill=\"none\"><rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{PLOT_W}\" height=\"{PLOT_H}\"/></g>"
    );
    s.push_str("<g id=\"ticks\" text-anchor=\"middle\">\n");
    for (k, w) in trace.config.path.iter().enumerate() {
        let x = xmap(k as f64);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{TOP}\" x2=\"{x:.2}\" y2=\"{bottom}\" stroke=\"#888\" stroke-dasharray=\"4 3\"/><text x=\"{x:.2}\" y=\"{}\">T={} μ/μ₀={}</text>",
            bottom + 18.0,
            format_tick(w.t),
            format_tick(w.mu)
        );
    }
    for k in 0..=4 {
        let e = -emax + 2.0 * emax * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 8.0,
            ymap(e) + 4.0,
            format_tick(e / trace.delta0)
        );
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        "<text id=\"xlabel\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">path</text>\n\
         <text id=\"ylabel\" x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">Re E / Δ</text>",
        LEFT + PLOT_W / 2.0,
        bottom + 40.0,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0
    );
    let c = &trace.config;
    let _ = writeln!(
        s,
        "<text id=\"annotation\" x=\"{LEFT}\" y=\"24\">{}</text>\n</svg>",
        esc(&format!(
            "{} class, {} variant, M={}, N={}, seed {}, {} coalescences",
            c.ensemble.class,
            c.variant,
            c.ensemble.dim,
            c.ensemble.channels,
            c.ensemble.seed,
            trace.events.iter().filter(|e| e.kind == EventKind::Coalescence).count()
        ))
    );
    s
}
