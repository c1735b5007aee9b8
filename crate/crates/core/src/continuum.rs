//! Continuous and countably infinite Schmidt sums.
//!
//! Infinite coefficient sequences are truncated to a dominant prefix plus a
//! remainder of controlled norm. Wave functions on the line are replaced by
//! their averages over mesh cells; the normalized box functions then serve
//! as Schmidt states and the fine-graining engine counts cell probabilities.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use num_rational::BigRational;
use serde::Serialize;

use crate::born::{born_probabilities, to_f64, BornResult};
use crate::error::{Error, Result};
use crate::hilbert::{Bipartition, StateVector, DEFAULT_ZERO_TOL};

/// Default Gauss–Legendre order per cell.
pub const DEFAULT_QUAD_POINTS: usize = 16;
/// Probability mass allowed outside the mesh.
pub const COVERAGE_TOL: f64 = 1e-6;
/// Terms examined before giving up on a generated sequence.
pub const DEFAULT_TERM_LIMIT: usize = 1 << 20;

/// Square-modulus tail `sum_{k > n} |a_k|^2`.
pub type TailFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;
/// Coefficient `a_k` for `k >= 1`.
pub type TermFn = Arc<dyn Fn(usize) -> C64 + Send + Sync>;

/// Schmidt coefficients `a_1, a_2, ...`.
#[derive(Clone)]
pub enum CoefficientSequence {
    Finite(Vec<C64>),
    Generated {
        term: TermFn,
        /// Closed-form tail; without it the tail is `1 - partial sum`.
        tail: Option<TailFn>,
        limit: usize,
    },
}

impl fmt::Debug for CoefficientSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(a) => f.debug_tuple("Finite").field(a).finish(),
            Self::Generated { tail, limit, .. } => f
                .debug_struct("Generated")
                .field("closed_tail", &tail.is_some())
                .field("limit", limit)
                .finish(),
        }
    }
}

impl CoefficientSequence {
    /// `|a_k|^2 = 2^{-k}`.
    pub fn geometric() -> Self {
        Self::Generated {
            term: Arc::new(|k| C64::new(0.5f64.powi(k as i32).sqrt(), 0.0)),
            tail: Some(Arc::new(|n| 0.5f64.powi(n as i32))),
            limit: 1074,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Truncation {
    /// Number of retained terms.
    pub kept: usize,
    /// Weight of the discarded remainder.
    pub delta_sq: f64,
    pub probs: Vec<f64>,
    /// Probabilities conditioned on a retained outcome.
    pub conditional: Vec<f64>,
}

/// Smallest prefix whose discarded tail weighs at most `delta_target^2`.
pub fn truncate(seq: &CoefficientSequence, delta_target: f64) -> Result<Truncation> {
    if !(delta_target > 0.0 && delta_target < 1.0) {
        return Err(Error::Parameter(format!(
            "delta {delta_target} must lie in (0, 1)"
        )));
    }
    let budget = delta_target * delta_target;
    let (probs, delta_sq) = match seq {
        CoefficientSequence::Finite(a) => {
            let p: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
            let norm: f64 = p.iter().sum();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::NotNormalized { norm: norm.sqrt() });
            }
            let mut suffix = vec![0.0; p.len() + 1];
            for k in (0..p.len()).rev() {
                suffix[k] = suffix[k + 1] + p[k];
            }
            let kept = (0..=p.len())
                .find(|&n| suffix[n] <= budget)
                .expect("empty tail qualifies");
            (p[..kept].to_vec(), suffix[kept])
        }
        CoefficientSequence::Generated { term, tail, limit } => {
            let mut p = Vec::new();
            let mut partial = 0.0;
            let tail_at = |n: usize, partial: f64| match tail {
                Some(t) => t(n),
                None => (1.0 - partial).max(0.0),
            };
            let mut n = 0;
            loop {
                let t = tail_at(n, partial);
                if t <= budget {
                    break (p, t);
                }
                if n >= *limit {
                    return Err(Error::TailNotComputable(*limit));
                }
                n += 1;
                let pk = term(n).norm_sqr();
                partial += pk;
                p.push(pk);
            }
        }
    };
    let kept_sum: f64 = probs.iter().sum();
    let conditional = probs.iter().map(|p| p / kept_sum).collect();
    Ok(Truncation {
        kept: probs.len(),
        delta_sq,
        probs,
        conditional,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let prev = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> C64 {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| f(mid + half * x) * *w)
        .sum::<C64>()
        * half
}

/// Wave function on the real line.
#[derive(Clone)]
pub enum WaveFunction {
    /// `(pi w^2)^{-1/4} exp(-(x - c)^2 / (2 w^2))`
    Gaussian { center: f64, width: f64 },
    /// `1/sqrt(b - a)` on `[a, b)`.
    Uniform { a: f64, b: f64 },
    /// Constant amplitudes on disjoint boxes `[a, b)`; normalized on construction.
    BoxMixture(Vec<(f64, f64, C64)>),
    /// Linear interpolation of samples, zero outside; normalized on construction.
    Sampled { xs: Vec<f64>, values: Vec<C64> },
    /// Arbitrary amplitude supported on `support`.
    Custom {
        f: Arc<dyn Fn(f64) -> C64 + Send + Sync>,
        support: (f64, f64),
        smooth: bool,
    },
}

impl fmt::Debug for WaveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { center, width } => {
                write!(f, "Gaussian(center={center}, width={width})")
            }
            Self::Uniform { a, b } => write!(f, "Uniform[{a}, {b})"),
            Self::BoxMixture(b) => write!(f, "BoxMixture({} boxes)", b.len()),
            Self::Sampled { xs, .. } => write!(f, "Sampled({} points)", xs.len()),
            Self::Custom {
                support, smooth, ..
            } => write!(f, "Custom(support={support:?}, smooth={smooth})"),
        }
    }
}

impl WaveFunction {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Parameter("gaussian width must be positive".into()));
        }
        Ok(Self::Gaussian { center, width })
    }

    pub fn standard_gaussian() -> Self {
        Self::Gaussian {
            center: 0.0,
            width: 1.0,
        }
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Interval { x1: a, x2: b });
        }
        Ok(Self::Uniform { a, b })
    }

    pub fn box_mixture(boxes: Vec<(f64, f64, C64)>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Empty("boxes"));
        }
        let mut sorted = boxes.clone();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in sorted.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::Parameter("boxes overlap".into()));
            }
        }
        if let Some(b) = sorted.iter().find(|b| !(b.1 > b.0)) {
            return Err(Error::Interval { x1: b.0, x2: b.1 });
        }
        let norm: f64 = boxes
            .iter()
            .map(|(a, b, c)| c.norm_sqr() * (b - a))
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            return Err(Error::Parameter("box amplitudes vanish".into()));
        }
        Ok(Self::BoxMixture(
            boxes
                .into_iter()
                .map(|(a, b, c)| (a, b, c / norm))
                .collect(),
        ))
    }

    pub fn sampled(xs: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::Parameter("need at least two samples".into()));
        }
        if xs.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                actual: values.len(),
            });
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("sample abscissae must increase".into()));
        }
        // |psi|^2 is quadratic on each segment: two-point Gauss is exact
        let rule = gauss_legendre(2);
        let raw = Self::Sampled {
            xs: xs.clone(),
            values: values.clone(),
        };
        let norm_sq: f64 = xs
            .windows(2)
            .map(|w| integrate(|x| C64::new(raw.eval(x).norm_sqr(), 0.0), w[0], w[1], &rule).re)
            .sum();
        if norm_sq <= 0.0 {
            return Err(Error::Parameter("samples vanish".into()));
        }
        let s = norm_sq.sqrt();
        Ok(Self::Sampled {
            xs,
            values: values.into_iter().map(|v| v / s).collect(),
        })
    }

    /// Whitespace-separated `x re [im]` rows; `#` starts a comment.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            match nums.as_slice() {
                [_, re] => values.push(C64::new(*re, 0.0)),
                [_, re, im] => values.push(C64::new(*re, *im)),
                _ => return Err(Error::Parse(format!("bad sample row {line:?}"))),
            }
            xs.push(nums[0]);
        }
        Self::sampled(xs, values)
    }

    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse_table(&text)
    }

    /// `gaussian:CENTER,WIDTH`, `uniform:A,B` or `boxes:A,B,AMP;A,B,AMP;...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
                })
                .collect()
        };
        match name {
            "gaussian" => match nums(args)?.as_slice() {
                [] => Ok(Self::standard_gaussian()),
                [c, w] => Self::gaussian(*c, *w),
                _ => Err(Error::Parse("gaussian takes CENTER,WIDTH".into())),
            },
            "uniform" => match nums(args)?.as_slice() {
                [a, b] => Self::uniform(*a, *b),
                _ => Err(Error::Parse("uniform takes A,B".into())),
            },
            "boxes" => {
                let boxes = args
                    .split(';')
                    .map(|b| match nums(b)?.as_slice() {
                        [a, b, amp] => Ok((*a, *b, C64::new(*amp, 0.0))),
                        _ => Err(Error::Parse(format!("box {b:?} needs A,B,AMP"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::box_mixture(boxes)
            }
            other => Err(Error::Parse(format!(
                "unknown wave function family {other:?}"
            ))),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        match self {
            Self::Gaussian { center, width } => {
                let z = (x - center) / width;
                let norm = (std::f64::consts::PI * width * width).powf(-0.25);
                C64::new(norm * (-0.5 * z * z).exp(), 0.0)
            }
            Self::Uniform { a, b } => {
                if x >= *a && x < *b {
                    C64::new(1.0 / (b - a).sqrt(), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Self::BoxMixture(boxes) => boxes
                .iter()
                .find(|(a, b, _)| x >= *a && x < *b)
                .map_or(C64::new(0.0, 0.0), |b| b.2),
            Self::Sampled { xs, values } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return C64::new(0.0, 0.0);
                }
                let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
                let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                values[i - 1] * (1.0 - t) + values[i] * t
            }
            Self::Custom { f, .. } => f(x),
        }
    }

    fn is_smooth(&self) -> bool {
        !matches!(self, Self::Custom { smooth: false, .. })
    }
}

/// Cells `[x_i, x_{i+1})` starting at `x0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mesh {
    x0: f64,
    widths: Vec<f64>,
}

impl Mesh {
    pub fn uniform(x0: f64, dx: f64, cells: usize) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::Parameter("cell width must be positive".into()));
        }
        Self::adaptive(x0, vec![dx; cells])
    }

    /// Uniform mesh of `[x0, x1)` with cells as close to `dx` as fits.
    pub fn spanning(x0: f64, x1: f64, dx: f64) -> Result<Self> {
        if !(x1 > x0) || !(dx > 0.0) {
            return Err(Error::Interval { x1: x0, x2: x1 });
        }
        let cells = ((x1 - x0) / dx).round().max(1.0) as usize;
        Self::uniform(x0, (x1 - x0) / cells as f64, cells)
    }

    pub fn adaptive(x0: f64, widths: Vec<f64>) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::Empty("mesh"));
        }
        if widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Parameter("cell widths must be positive".into()));
        }
        Ok(Self { x0, widths })
    }

    /// Cells of equal probability under `psi` on `[x0, x1)`.
    pub fn equal_mass(
        psi: &WaveFunction,
        x0: f64,
        x1: f64,
        cells: usize,
        quad_points: usize,
    ) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Empty("mesh"));
        }
        let fine = Self::spanning(x0, x1, (x1 - x0) / (cells as f64 * 64.0))?;
        let rule = gauss_legendre(quad_points);
        let edges = fine.edges();
        let mut cdf = vec![0.0];
        for w in edges.windows(2) {
            let m = integrate(|x| C64::new(psi.eval(x).norm_sqr(), 0.0), w[0], w[1], &rule).re;
            cdf.push(cdf.last().unwrap() + m);
        }
        let total = *cdf.last().unwrap();
        if total <= 0.0 {
            return Err(Error::MeshCoverage {
                missing: 1.0,
                tol: COVERAGE_TOL,
            });
        }
        let mut cuts = vec![x0];
        for c in 1..cells {
            let target = total * c as f64 / cells as f64;
            let i = cdf.partition_point(|&v| v < target).clamp(1, cdf.len() - 1);
            let span = cdf[i] - cdf[i - 1];
            let t = if span > 0.0 {
                (target - cdf[i - 1]) / span
            } else {
                0.0
            };
            let x = edges[i - 1] + t * (edges[i] - edges[i - 1]);
            // keep every width positive even where psi vanishes
            let floor = cuts.last().unwrap() + 1e-12 * (x1 - x0);
            cuts.push(x.max(floor));
        }
        cuts.push(x1);
        Self::adaptive(x0, cuts.windows(2).map(|w| w[1] - w[0]).collect())
    }

    pub fn cells(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn start(&self) -> f64 {
        self.x0
    }

    pub fn end(&self) -> f64 {
        *self.edges().last().unwrap()
    }

    pub fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.widths.len() + 1);
        let mut x = self.x0;
        e.push(x);
        for w in &self.widths {
            x += w;
            e.push(x);
        }
        e
    }

    /// Every cell split into `parts` equal pieces.
    pub fn refine(&self, parts: usize) -> Result<Self> {
        if parts == 0 {
            return Err(Error::Parameter(
                "refinement needs at least one part".into(),
            ));
        }
        let widths = self
            .widths
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w / parts as f64, parts))
            .collect();
        Self::adaptive(self.x0, widths)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscretizedState {
    /// Cell averages `psi_k`.
    pub psi: Vec<C64>,
    pub mesh: Mesh,
    /// `1 - sum_k |psi_k|^2 dx_k`
    pub remainder_sq: f64,
    pub quad_points: usize,
}

impl DiscretizedState {
    /// `|psi_k|^2 dx_k`
    pub fn cell_probabilities(&self) -> Vec<f64> {
        self.psi
            .iter()
            .zip(self.mesh.widths())
            .map(|(p, w)| p.norm_sqr() * w)
            .collect()
    }

    /// Schmidt coefficients `psi_k sqrt(dx_k)` of the normalized boxes.
    pub fn cell_amplitudes(&self) -> Vec<C64> {
        self.psi
            .iter()
            .zip(self.mesh.widths())
            .map(|(p, w)| p * w.sqrt())
            .collect()
    }
}

/// Cell averages by Gauss–Legendre quadrature of order `quad_points`.
pub fn discretize(psi: &WaveFunction, mesh: &Mesh, quad_points: usize) -> Result<DiscretizedState> {
    discretize_with(psi, mesh, quad_points, COVERAGE_TOL)
}

pub fn discretize_with(
    psi: &WaveFunction,
    mesh: &Mesh,
    quad_points: usize,
    coverage_tol: f64,
) -> Result<DiscretizedState> {
    if !psi.is_smooth() {
        return Err(Error::Irregular);
    }
    if quad_points == 0 {
        return Err(Error::Parameter(
            "quadrature needs at least one point".into(),
        ));
    }
    let rule = gauss_legendre(quad_points);
    let edges = mesh.edges();
    let mut values = Vec::with_capacity(mesh.cells());
    let mut on_mesh = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        values.push(integrate(|x| psi.eval(x), a, b, &rule) / (b - a));
        on_mesh += integrate(|x| C64::new(psi.eval(x).norm_sqr(), 0.0), a, b, &rule).re;
    }
    let missing = 1.0 - on_mesh;
    if missing > coverage_tol {
        return Err(Error::MeshCoverage {
            missing,
            tol: coverage_tol,
        });
    }
    let captured: f64 = values
        .iter()
        .zip(mesh.widths())
        .map(|(p, w)| p.norm_sqr() * w)
        .sum();
    Ok(DiscretizedState {
        psi: values,
        mesh: mesh.clone(),
        remainder_sq: 1.0 - captured,
        quad_points,
    })
}

/// Overlap `<Xi|r>` between the piecewise-constant part and the remainder,
/// integrated with an independent rule of order `check_points`.
pub fn cross_term(d: &DiscretizedState, psi: &WaveFunction, check_points: usize) -> C64 {
    let rule = gauss_legendre(check_points);
    let edges = d.mesh.edges();
    edges
        .windows(2)
        .zip(&d.psi)
        .map(|(w, &xi)| xi.conj() * integrate(|x| psi.eval(x) - xi, w[0], w[1], &rule))
        .sum()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntervalProbability {
    pub probability: f64,
    /// Some cell was only partly inside and was split proportionally.
    pub approximate: bool,
}

/// `sum_k |psi_k|^2 |[x1, x2) ∩ cell_k|`.
pub fn interval_probability(d: &DiscretizedState, x1: f64, x2: f64) -> Result<IntervalProbability> {
    let edges = d.mesh.edges();
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    let slack = 1e-12 * (hi - lo).max(1.0);
    if !(x1 < x2) || x1 < lo - slack || x2 > hi + slack {
        return Err(Error::Interval { x1, x2 });
    }
    let mut probability = 0.0;
    let mut approximate = false;
    for (k, w) in edges.windows(2).enumerate() {
        let overlap = (x2.min(w[1]) - x1.max(w[0])).max(0.0);
        if overlap <= slack {
            continue;
        }
        let width = w[1] - w[0];
        if overlap < width - slack {
            approximate = true;
        }
        probability += d.psi[k].norm_sqr() * overlap.min(width);
    }
    Ok(IntervalProbability {
        probability,
        approximate,
    })
}

/// Envariance-derived cell probabilities.
#[derive(Clone, Debug)]
pub struct ContinuumBorn {
    /// Pipeline probability per cell; cells folded into the rest read 0.
    pub probs: Vec<BigRational>,
    /// Pipeline probability of the rest outcome (remainder and folded cells).
    pub rest: Option<BigRational>,
    /// Direct `|psi_k|^2 dx_k`.
    pub direct: Vec<f64>,
    /// Cells folded into the rest outcome.
    pub folded: Vec<usize>,
    pub result: BornResult,
}

impl ContinuumBorn {
    /// Largest gap between pipeline and direct cell probabilities.
    pub fn max_gap(&self) -> f64 {
        self.probs
            .iter()
            .zip(&self.direct)
            .map(|(p, d)| (to_f64(p) - d).abs())
            .fold(0.0, f64::max)
    }
}

/// Default weight below which a cell joins the rest outcome: half the finest
/// probability step `1/m_max` the rationalizer can express.
pub fn default_fold_below(m_max: u64) -> f64 {
    0.5 / m_max as f64
}

/// Entangle each normalized box with its own environment state, add the
/// remainder as one more outcome, and run the fine-graining pipeline.
/// Cells lighter than `fold_below` join the remainder outcome (`0.0`
/// keeps every cell).
pub fn born_continuum(d: &DiscretizedState, m_max: u64, fold_below: f64) -> Result<ContinuumBorn> {
    let amps = d.cell_amplitudes();
    let direct = d.cell_probabilities();
    let folded: Vec<usize> = (0..amps.len())
        .filter(|&k| direct[k] < fold_below)
        .collect();
    let kept: Vec<usize> = (0..amps.len())
        .filter(|&k| direct[k] >= fold_below)
        .collect();
    let rest_weight = d.remainder_sq.max(0.0) + folded.iter().map(|&k| direct[k]).sum::<f64>();
    let with_rest = rest_weight.sqrt() > DEFAULT_ZERO_TOL;
    let outcomes = kept.len() + usize::from(with_rest);
    let cap = crate::born::DENSE_CAP;
    if outcomes * outcomes > cap {
        return Err(Error::SizeCap {
            needed: (outcomes * outcomes) as u128,
            cap: cap as u128,
        });
    }
    let mut coeffs: Vec<C64> = kept.iter().map(|&k| amps[k]).collect();
    if with_rest {
        coeffs.push(C64::new(rest_weight.sqrt(), 0.0));
    }
    let mut state_amps = vec![C64::new(0.0, 0.0); outcomes * outcomes];
    for (i, c) in coeffs.iter().enumerate() {
        state_amps[i * outcomes + i] = *c;
    }
    let state = StateVector::from_unnormalized(vec![outcomes, outcomes], state_amps)?;
    let result = born_probabilities(&state, &Bipartition::prefix(1, 2)?, m_max)?;
    let mut by_outcome = vec![BigRational::from_integer(0.into()); outcomes];
    for (v, p) in result
        .decomposition
        .left_basis
        .iter()
        .zip(&result.probs_exact)
    {
        let i = (0..outcomes)
            .find(|&i| v[i].norm() > 1.0 - 1e-9)
            .ok_or_else(|| Error::Inconsistent("cell Schmidt vector is not a box state".into()))?;
        by_outcome[i] = p.clone();
    }
    let mut probs = vec![BigRational::from_integer(0.into()); amps.len()];
    for (slot, &k) in kept.iter().enumerate() {
        probs[k] = by_outcome[slot].clone();
    }
    let rest = with_rest.then(|| by_outcome[outcomes - 1].clone());
    Ok(ContinuumBorn {
        probs,
        rest,
        direct,
        folded,
        result,
    })
}
