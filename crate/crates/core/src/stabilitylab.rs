//! Measurement of the stability constants `α_*`, `α^*` of a stabilization
//! against the exact energy, restricted to the kernel of `Π∇`, plus the
//! interpolation estimates that depend on them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};
use crate::mesh::{generate_collapsing_quad, Point2, Polygon};
use crate::oracle::{self, OracleConfig, VirtualBasisOracle};
use crate::polybasis::dim_p;
use crate::space::{LocalSpace, SpaceFamily, SpaceKind};
use crate::stab::{stabilization, StabKind};

/// Relative rank tolerance for the nullspace of `Π∇`.
pub const KERNEL_RANK_TOL: f64 = 1e-9;
/// Relative slack used by the pass/fail checks on measured bounds.
pub const BOUND_SLACK: f64 = 1e-3;

/// Orthonormal basis of `{v : Π∇ v = 0}` in DoF space.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    pub columns: DMatrix<f64>,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }
}

pub fn kernel_basis(space: &LocalSpace) -> Result<KernelBasis> {
    nullspace(&space.projectors().pi_nabla, dim_p(space.kind().p()))
}

/// Nullspace of a `m × n` matrix of expected rank `rank`, via the SVD of
/// `Mᵀ M` completed to a square matrix.
fn nullspace(m: &DMatrix<f64>, rank: usize) -> Result<KernelBasis> {
    let n = m.ncols();
    let mut sq = DMatrix::zeros(n.max(m.nrows()), n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let smax = svd.singular_values.amax();
    let tol = KERNEL_RANK_TOL * smax.max(f64::MIN_POSITIVE);
    let found = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if found != rank {
        return Err(VemError::Rank {
            expected: rank,
            found,
        });
    }
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| vt.row(i).transpose())
        .collect();
    Ok(KernelBasis {
        columns: DMatrix::from_columns(&cols),
    })
}

/// Extreme eigenvalues of the pencil `(Kᵀ S K, Kᵀ G K)`.
pub fn pencil_extremes(s: &DMatrix<f64>, g: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<(f64, f64)> {
    let sk = k.transpose() * s * k;
    let gk = k.transpose() * g * k;
    let gk = 0.5 * (&gk + gk.transpose());
    let chol = gk.cholesky().ok_or(VemError::IndefiniteGram)?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(VemError::IndefiniteGram)?;
    let c = &linv * sk * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let ev = c.symmetric_eigenvalues();
    Ok((ev.min(), ev.max()))
}

/// Where a measurement was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityContext {
    pub family: SpaceFamily,
    pub stab: StabKind,
    pub p: usize,
    /// Element diameter.
    pub h: f64,
    pub geom_tag: String,
    pub eps: Option<f64>,
    pub oracle: OracleConfig,
    pub min_edge_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub alpha_star: f64,
    pub alpha_sup: f64,
    pub ratio: f64,
    /// Lowest ratio `R(v,v) / |v|²` over all DoF vectors, `R` the raw form.
    pub alpha_star_full: f64,
    pub context: StabilityContext,
}

impl StabilityReport {
    pub const CSV_HEADER: &'static str =
        "kind,stab,p,h,geom_tag,eps,alpha_star,alpha_sup,ratio,oracle_level,min_edge_ratio";

    pub fn to_csv(&self) -> String {
        let c = &self.context;
        format!(
            "{},{},{},{:e},{},{},{:e},{:e},{:e},{},{:e}",
            c.family.tag(),
            c.stab.tag(),
            c.p,
            c.h,
            c.geom_tag,
            c.eps.map(|e| format!("{e:e}")).unwrap_or_default(),
            self.alpha_star,
            self.alpha_sup,
            self.ratio,
            c.oracle.level,
            c.min_edge_ratio,
        )
    }
}

/// Everything computed for one element, kept for follow-up checks.
#[derive(Debug, Clone)]
pub struct ElementStability {
    pub report: StabilityReport,
    pub space: LocalSpace,
    pub oracle: VirtualBasisOracle,
    pub gram: DMatrix<f64>,
    pub stab_matrix: DMatrix<f64>,
    /// The uncomposed form, positive definite on all DoF vectors.
    pub raw_matrix: DMatrix<f64>,
    pub kernel: KernelBasis,
}

/// Measures `α_*`, `α^*` on one element.
pub fn measure_element(
    poly: &Polygon,
    kind: SpaceKind,
    stab: StabKind,
    config: OracleConfig,
    geom_tag: &str,
    eps: Option<f64>,
) -> Result<ElementStability> {
    let space = LocalSpace::new(poly, kind)?;
    let kernel = kernel_basis(&space)?;
    let oracle = oracle::solve_basis(&space, config)?;
    let gram = oracle.exact_gram();
    let sm = stabilization(&space, stab);
    let (stab_matrix, raw_matrix) = (sm.s, sm.raw);
    let (alpha_star, alpha_sup) = pencil_extremes(&stab_matrix, &gram, &kernel.columns)?;
    let alpha_star_full = alpha_star_full(&raw_matrix, &gram)?;
    let report = StabilityReport {
        alpha_star,
        alpha_sup,
        ratio: alpha_sup / alpha_star,
        alpha_star_full,
        context: StabilityContext {
            family: kind.family,
            stab,
            p: kind.degree,
            h: poly.diameter(),
            geom_tag: geom_tag.to_string(),
            eps,
            oracle: config,
            min_edge_ratio: poly.shape_metrics().min_edge_ratio,
        },
    };
    Ok(ElementStability {
        report,
        space,
        oracle,
        gram,
        stab_matrix,
        raw_matrix,
        kernel,
    })
}

/// `min_v R(v,v) / |v|²` over all non-constant DoF vectors, for the raw
/// (uncomposed) form `R`: `1 / λ_max` of the pencil `(G, R)`.
fn alpha_star_full(raw: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    let n = g.nrows();
    let (_, hi) = pencil_extremes(g, raw, &DMatrix::identity(n, n))?;
    Ok(1.0 / hi)
}

/// Sample check of `α_* vᵀGv ≤ vᵀSv ≤ α^* vᵀGv` on random kernel vectors;
/// returns the largest relative violation (≤ 0 when the bounds hold).
pub fn random_kernel_violation(el: &ElementStability, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = &el.kernel.columns;
    let (lo, hi) = (el.report.alpha_star, el.report.alpha_sup);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let c = DVector::from_fn(k.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        let v = k * c;
        let gv = (v.transpose() * &el.gram * &v)[0];
        let sv = (v.transpose() * &el.stab_matrix * &v)[0];
        worst = worst.max((lo * gv - sv) / sv.abs().max(f64::MIN_POSITIVE));
        worst = worst.max((sv - hi * gv) / sv.abs().max(f64::MIN_POSITIVE));
    }
    worst
}

/// Sample check of `α_star_full vᵀGv ≤ vᵀRv` on arbitrary random DoF vectors.
pub fn random_full_violation(el: &ElementStability, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = el.space.n_dofs();
    let a = el.report.alpha_star_full;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let gv = (v.transpose() * &el.gram * &v)[0];
        let sv = (v.transpose() * &el.raw_matrix * &v)[0];
        worst = worst.max((a * gv - sv) / sv.abs().max(f64::MIN_POSITIVE));
    }
    worst
}

/// A point of a sweep: either a report or the reason it was skipped.
pub type SweepRow = std::result::Result<StabilityReport, SkippedRow>;

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRow {
    pub label: String,
    pub reason: String,
}

fn run_sweep(points: Vec<(String, Polygon, SpaceKind, Option<f64>)>, stab: StabKind, config: OracleConfig) -> Vec<SweepRow> {
    points
        .into_par_iter()
        .map(|(tag, poly, kind, eps)| {
            measure_element(&poly, kind, stab, config, &tag, eps)
                .map(|el| el.report)
                .map_err(|e| SkippedRow {
                    label: format!("{tag} p={}", kind.degree),
                    reason: e.to_string(),
                })
        })
        .collect()
}

/// Unit-square-shaped element `[0,h]²` for each `h`.
pub fn h_sweep(kind: SpaceKind, stab: StabKind, hs: &[f64], config: OracleConfig) -> Result<Vec<SweepRow>> {
    let base = generate_collapsing_quad(1.0)?;
    let points = hs
        .iter()
        .map(|&h| Ok(("square".to_string(), base.transformed(h, Point2::new(0.0, 0.0))?, kind, None)))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_sweep(points, stab, config))
}

pub fn p_sweep(
    poly: &Polygon,
    geom_tag: &str,
    family: SpaceFamily,
    stab: StabKind,
    ps: impl IntoIterator<Item = usize>,
    config: OracleConfig,
) -> Vec<SweepRow> {
    let points = ps
        .into_iter()
        .map(|p| (geom_tag.to_string(), poly.clone(), SpaceKind::new(family, p), None))
        .collect();
    run_sweep(points, stab, config)
}

pub fn collapse_sweep(eps: &[f64], kind: SpaceKind, stab: StabKind, config: OracleConfig) -> Vec<SweepRow> {
    let mut points = Vec::new();
    let mut bad = Vec::new();
    for (i, &e) in eps.iter().enumerate() {
        match generate_collapsing_quad(e) {
            Ok(poly) => points.push((format!("collapse:{e}"), poly, kind, Some(e))),
            Err(err) => bad.push((i, err.to_string())),
        }
    }
    let mut rows = run_sweep(points, stab, config);
    for (i, reason) in bad {
        rows.insert(
            i,
            Err(SkippedRow {
                label: format!("collapse:{}", eps[i]),
                reason,
            }),
        );
    }
    rows
}

/// `eps = 1, 10^-1, ...` down to `eps_min`.
pub fn decades(eps_min: f64) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut k = 1;
    loop {
        let e = 10f64.powi(-k);
        if e < eps_min * (1.0 - 1e-12) {
            break;
        }
        out.push(e);
        k += 1;
    }
    out
}

/// Largest relative spread `(max - min) / min` of a positive sequence.
pub fn relative_spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}

/// True when each value is at least `1 - slack` times its predecessor.
pub fn nondecreasing_within(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] >= (1.0 - slack) * w[0])
}

/// Outcome of the stability-based interpolation estimate
/// `|v - v_I| ≤ (1 + α^*/α_*) inf_q |v - q|`.
#[derive(Debug, Clone, Serialize)]
pub struct InterpBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub best_error: f64,
    pub seminorm: f64,
    pub alpha_star: f64,
    pub alpha_sup: f64,
    pub pass: bool,
}

pub fn interp_bound_check(
    poly: &Polygon,
    kind: SpaceKind,
    stab: StabKind,
    v: &dyn Fn(Point2) -> f64,
    config: OracleConfig,
) -> Result<InterpBoundCheck> {
    let el = measure_element(poly, kind, stab, config, "", None)?;
    interp_bound_from(&el, v)
}

pub fn interp_bound_from(el: &ElementStability, v: &dyn Fn(Point2) -> f64) -> Result<InterpBoundCheck> {
    let ie = oracle::interpolation_error(&el.space, &el.oracle, v)?;
    let (a, b) = (el.report.alpha_star, el.report.alpha_sup);
    let rhs = (1.0 + b / a) * ie.best.best_error;
    Ok(InterpBoundCheck {
        lhs: ie.error,
        rhs,
        best_error: ie.best.best_error,
        seminorm: ie.best.seminorm,
        alpha_star: a,
        alpha_sup: b,
        pass: ie.error <= rhs * (1.0 + BOUND_SLACK) + 1e-12 * ie.best.seminorm.max(1.0),
    })
}

/// Outcome of `|v - v_I| ≤ inf_q |v - q|` for nonconforming spaces.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiOptimalityCheck {
    pub lhs: f64,
    pub best_error: f64,
    pub seminorm: f64,
    pub pass: bool,
}

pub fn quasi_optimality_check(
    poly: &Polygon,
    kind: SpaceKind,
    v: &dyn Fn(Point2) -> f64,
    config: OracleConfig,
) -> Result<QuasiOptimalityCheck> {
    if kind.family.is_conforming() {
        return Err(VemError::Unsupported(
            "quasi-optimality with constant one holds for nonconforming spaces".into(),
        ));
    }
    let space = LocalSpace::new(poly, kind)?;
    let or = oracle::solve_basis(&space, config)?;
    let ie = oracle::interpolation_error(&space, &or, v)?;
    Ok(QuasiOptimalityCheck {
        lhs: ie.error,
        best_error: ie.best.best_error,
        seminorm: ie.best.seminorm,
        pass: ie.error <= ie.best.best_error * (1.0 + BOUND_SLACK) + 1e-12 * ie.best.seminorm.max(1.0),
    })
}

/// Change of the oracle quantities between two refinement levels.
#[derive(Debug, Clone, Serialize)]
pub struct SelfConvergence {
    pub coarse_level: usize,
    pub fine_level: usize,
    /// `‖G_L - G_{L+1}‖_F / ‖G_{L+1}‖_F`
    pub gram_drift: f64,
    pub alpha_star_drift: f64,
    pub alpha_sup_drift: f64,
    pub unisolvence_error: f64,
}

impl SelfConvergence {
    pub fn max_drift(&self) -> f64 {
        self.gram_drift.max(self.alpha_star_drift).max(self.alpha_sup_drift)
    }
}

pub fn self_convergence(
    poly: &Polygon,
    kind: SpaceKind,
    stab: StabKind,
    config: OracleConfig,
) -> Result<SelfConvergence> {
    let finer = config.with_level(config.level + 1);
    let a = measure_element(poly, kind, stab, config, "", None)?;
    let b = measure_element(poly, kind, stab, finer, "", None)?;
    let rel = |x: f64, y: f64| ((x - y) / y).abs();
    let unisolvence_error = a
        .oracle
        .unisolvence_error(&a.space)?
        .max(b.oracle.unisolvence_error(&b.space)?);
    Ok(SelfConvergence {
        coarse_level: config.level,
        fine_level: finer.level,
        gram_drift: (&a.gram - &b.gram).norm() / b.gram.norm(),
        alpha_star_drift: rel(a.report.alpha_star, b.report.alpha_star),
        alpha_sup_drift: rel(a.report.alpha_sup, b.report.alpha_sup),
        unisolvence_error,
    })
}
