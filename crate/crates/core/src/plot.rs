//! Minimal static SVG line plots. CSV stays the authoritative artifact;
//! these images exist so experiment sweeps can be eyeballed without
//! external tooling.

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Log-x/log-y line plot (exploitability curves live on decades).
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (860.0, 520.0);
    let (ml, mr, mt, mb) = (90.0, 190.0, 50.0, 60.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;

    let finite = |v: f64| v.is_finite() && v > 0.0;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            if finite(x) && finite(y) {
                xs.push(x.log10());
                ys.push(y.log10());
            }
        }
    }
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let sx = move |x: f64| ml + (x.log10() - x0) / (x1 - x0).max(1e-12) * pw;
    let sy = move |y: f64| mt + ph - (y.log10() - y0) / (y1 - y0).max(1e-12) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"17\">{}</text>\n",
        ml + pw / 2.0,
        escape(title)
    ));
    // Axes box.
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#333\"/>\n"
    ));
    // Decade ticks.
    for d in (x0.floor() as i64)..=(x1.ceil() as i64) {
        let x = 10f64.powi(d as i32);
        if x.log10() < x0 - 1e-9 || x.log10() > x1 + 1e-9 {
            continue;
        }
        let px = sx(x);
        svg.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{mt}\" x2=\"{px}\" y2=\"{}\" stroke=\"#ddd\"/>\n",
            mt + ph
        ));
        svg.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">1e{d}</text>\n",
            mt + ph + 20.0
        ));
    }
    for d in (y0.floor() as i64)..=(y1.ceil() as i64) {
        let y = 10f64.powi(d as i32);
        if y.log10() < y0 - 1e-9 || y.log10() > y1 + 1e-9 {
            continue;
        }
        let py = sy(y);
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#ddd\"/>\n",
            ml + pw
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">1e{d}</text>\n",
            ml - 8.0,
            py + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        ml + pw / 2.0,
        h - 14.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"22\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 22 {})\">{}</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(y_label)
    ));

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| finite(*x) && finite(*y))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.len() > 1 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                pts.join(" ")
            ));
        }
        for p in &pts {
            let mut it = p.split(',');
            let (px, py) = (it.next().unwrap(), it.next().unwrap());
            svg.push_str(&format!(
                "<circle cx=\"{px}\" cy=\"{py}\" r=\"3\" fill=\"{color}\"/>\n"
            ));
        }
        let ly = mt + 16.0 + i as f64 * 20.0;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            ml + pw + 12.0,
            ml + pw + 36.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            ml + pw + 42.0,
            ly + 4.0,
            escape(&s.name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (0.0, 1.0);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let svg = line_plot(
            "demo",
            "iterations",
            "mb/g",
            &[
                Series {
                    name: "a".into(),
                    points: vec![(1e6, 300.0), (1e7, 80.0), (1e8, 20.0)],
                },
                Series {
                    name: "b <x>".into(),
                    points: vec![(1e6, 400.0), (1e7, 120.0), (1e8, 35.0)],
                },
            ],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b &lt;x&gt;"));
    }
}
