//! SVG figures of a configuration inside an exact rational viewport.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::Zero;
use plc_core::oracles::ratio_to_f64;
use plc_core::{Configuration, Line};
use thiserror::Error;

use crate::config::{parse_rational_list, ConfigError};

const PLOT: f64 = 600.0;
const PAD: f64 = 20.0;
const LEGEND: f64 = 260.0;
const LEGEND_ROWS: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("empty viewport: need xmin < xmax and ymin < ymax")]
    EmptyViewport,
    #[error("bad viewport: {0}")]
    Parse(#[from] ConfigError),
}

/// Axis-aligned rectangle `[xmin, xmax] x [ymin, ymax]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Viewport {
    xmin: BigRational,
    xmax: BigRational,
    ymin: BigRational,
    ymax: BigRational,
}

impl Viewport {
    pub fn new(
        xmin: BigRational,
        xmax: BigRational,
        ymin: BigRational,
        ymax: BigRational,
    ) -> Result<Self, RenderError> {
        if xmin >= xmax || ymin >= ymax {
            return Err(RenderError::EmptyViewport);
        }
        Ok(Self {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    pub fn from_i64(xmin: i64, xmax: i64, ymin: i64, ymax: i64) -> Result<Self, RenderError> {
        let r = |v: i64| BigRational::from_integer(v.into());
        Self::new(r(xmin), r(xmax), r(ymin), r(ymax))
    }

    /// `xmin,xmax,ymin,ymax`.
    pub fn parse(s: &str) -> Result<Self, RenderError> {
        let v = parse_rational_list(s)?;
        let [a, b, c, d]: [BigRational; 4] = v
            .try_into()
            .map_err(|_| ConfigError("expected xmin,xmax,ymin,ymax".into()))?;
        Self::new(a, b, c, d)
    }

    /// Smallest viewport around every finite point, widened by one unit.
    pub fn fit(c: &Configuration) -> Self {
        let one = BigRational::from_integer(1.into());
        let mut pts = c.points().iter().filter_map(|p| p.to_affine());
        let Some((x0, y0)) = pts.next() else {
            return Self::from_i64(-1, 1, -1, 1).expect("nonempty");
        };
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (x0.clone(), x0, y0.clone(), y0);
        for (x, y) in pts {
            if x < xmin {
                xmin = x.clone();
            }
            if x > xmax {
                xmax = x;
            }
            if y < ymin {
                ymin = y.clone();
            }
            if y > ymax {
                ymax = y;
            }
        }
        Self::new(xmin - &one, xmax + &one, ymin - &one, ymax + one)
            .expect("widened box is nonempty")
    }

    pub fn contains(&self, x: &BigRational, y: &BigRational) -> bool {
        &self.xmin <= x && x <= &self.xmax && &self.ymin <= y && y <= &self.ymax
    }

    /// Portion of a finite line inside the rectangle, if it is more than a point.
    pub fn clip(&self, l: &Line) -> Option<[(BigRational, BigRational); 2]> {
        let t = l.triple();
        let (a, b, c) = (
            BigRational::from_integer(t.a().clone()),
            BigRational::from_integer(t.b().clone()),
            BigRational::from_integer(t.c().clone()),
        );
        let mut hits: Vec<(BigRational, BigRational)> = Vec::with_capacity(4);
        if !b.is_zero() {
            for x in [&self.xmin, &self.xmax] {
                let y = -(&a * x + &c) / &b;
                if self.ymin <= y && y <= self.ymax {
                    hits.push((x.clone(), y));
                }
            }
        }
        if !a.is_zero() {
            for y in [&self.ymin, &self.ymax] {
                let x = -(&b * y + &c) / &a;
                if self.xmin <= x && x <= self.xmax {
                    hits.push((x, y.clone()));
                }
            }
        }
        hits.sort();
        hits.dedup();
        if hits.len() < 2 {
            return None;
        }
        // Along a line the lexicographic order is monotone, so the extremes span it.
        let last = hits.pop().expect("len >= 2");
        Some([hits.swap_remove(0), last])
    }

    fn px(&self, x: &BigRational, y: &BigRational) -> (f64, f64) {
        let fx = ratio_to_f64(&((x - &self.xmin) / (&self.xmax - &self.xmin)));
        let fy = ratio_to_f64(&((&self.ymax - y) / (&self.ymax - &self.ymin)));
        (PAD + fx * PLOT, PAD + fy * PLOT)
    }
}

/// Counts of what a render drew.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderSummary {
    pub circles: usize,
    pub segments: usize,
    pub at_infinity: usize,
}

/// Points inside the viewport become circles (fresh ones highlighted), every
/// finite line crossing it becomes a segment, and points at infinity are
/// listed in the legend margin.
pub fn render_svg(c: &Configuration, vp: &Viewport) -> (String, RenderSummary) {
    let width = PAD * 2.0 + PLOT + LEGEND;
    let height = PAD * 2.0 + PLOT;
    let mut sum = RenderSummary::default();
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r##"<rect x="{PAD:.0}" y="{PAD:.0}" width="{PLOT:.0}" height="{PLOT:.0}" fill="none" stroke="#999"/>"##
    )
    .unwrap();
    writeln!(
        s,
        "<title>stage {}: {} points, {} lines</title>",
        c.stage(),
        c.n_points(),
        c.n_lines()
    )
    .unwrap();

    s.push_str(r##"<g stroke="#3465a4" stroke-width="0.6">"##);
    s.push('\n');
    for l in c.lines() {
        if let Some([p, q]) = vp.clip(l) {
            let (x1, y1) = vp.px(&p.0, &p.1);
            let (x2, y2) = vp.px(&q.0, &q.1);
            writeln!(
                s,
                r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
            )
            .unwrap();
            sum.segments += 1;
        }
    }
    s.push_str("</g>\n<g>\n");
    let mut infinite = Vec::new();
    for (i, p) in c.points().iter().enumerate() {
        match p.to_affine() {
            Some((x, y)) if vp.contains(&x, &y) => {
                let (cx, cy) = vp.px(&x, &y);
                let fill = if i >= c.fresh_points_from() {
                    "#cc0000"
                } else {
                    "black"
                };
                writeln!(
                    s,
                    r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{fill}"/>"#
                )
                .unwrap();
                sum.circles += 1;
            }
            Some(_) => {}
            None => infinite.push(p),
        }
    }
    s.push_str("</g>\n");

    sum.at_infinity = infinite.len();
    let lx = PAD * 2.0 + PLOT;
    s.push_str(r#"<g font-family="monospace" font-size="11">"#);
    s.push('\n');
    writeln!(
        s,
        r#"<text x="{lx:.0}" y="{:.0}">points at infinity: {}</text>"#,
        PAD + 10.0,
        infinite.len()
    )
    .unwrap();
    for (row, p) in infinite.iter().take(LEGEND_ROWS).enumerate() {
        let t = p.triple();
        let y = PAD + 26.0 + 13.0 * row as f64;
        writeln!(
            s,
            r#"<text x="{lx:.0}" y="{y:.0}">direction ({}, {})</text>"#,
            t.a(),
            t.b()
        )
        .unwrap();
    }
    if infinite.len() > LEGEND_ROWS {
        let y = PAD + 26.0 + 13.0 * LEGEND_ROWS as f64;
        writeln!(
            s,
            r#"<text x="{lx:.0}" y="{y:.0}">... {} more</text>"#,
            infinite.len() - LEGEND_ROWS
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    (s, sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use plc_core::{Budget, Engine, ParallelPolicy, StartConfig};

    #[test]
    fn viewport_validation() {
        assert_eq!(
            Viewport::from_i64(1, 1, 0, 2),
            Err(RenderError::EmptyViewport)
        );
        assert_eq!(Viewport::parse("0,1,3,2"), Err(RenderError::EmptyViewport));
        assert!(matches!(
            Viewport::parse("0,1,2"),
            Err(RenderError::Parse(_))
        ));
        assert!(Viewport::parse("-1/2,1,0,3/4").is_ok());
    }

    #[test]
    fn clipping_is_exact() {
        let vp = Viewport::from_i64(0, 2, 0, 2).unwrap();
        // x + y = 1
        let l = Line::from_i64(1, 1, -1).unwrap();
        let [p, q] = vp.clip(&l).unwrap();
        let r = |v: i64| BigRational::from_integer(v.into());
        assert_eq!((p, q), ((r(0), r(1)), (r(1), r(0))));
        // touches only the corner (0, 0)
        assert!(vp.clip(&Line::from_i64(1, 1, 0).unwrap()).is_none());
        // misses entirely
        assert!(vp.clip(&Line::from_i64(1, 0, -5).unwrap()).is_none());
        // runs along an edge
        assert!(vp.clip(&Line::from_i64(0, 1, 0).unwrap()).is_some());
    }

    #[test]
    fn stage_one_counts() {
        let e = Engine::new(ParallelPolicy::Skip, Budget::default(), 1);
        let c = e.init(&StartConfig::canonical()).unwrap();
        let (svg, sum) = render_svg(&c, &Viewport::fit(&c));
        assert_eq!(
            sum,
            RenderSummary {
                circles: 4,
                segments: 6,
                at_infinity: 0
            }
        );
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("<line").count(), 6);
    }
}
